"""Energy-based dynamical models: simulation, stability checks and experiments."""
