"""Advection-diffusion lab: transport operators, controller, simulations and TVD experiments."""
