"""annihilate-lab: simulation and exact analysis of two-type
diffusion-limited annihilating systems on lines, lattices, tori, and
bidirected regular trees."""

__version__ = "0.1.0"
