"""Configuration and the structure-constant cache."""
