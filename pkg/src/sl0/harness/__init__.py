"""Instances, experiments, property checks and the command-line front end."""
