"""Declarative configuration: frozen defaults, CSV contracts and run-config schemas."""
