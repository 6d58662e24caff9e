"""Random iteration of rational maps: heights, degrees, and Galois towers."""
