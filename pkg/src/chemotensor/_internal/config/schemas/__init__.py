"""Pydantic schemas of the JSON input files (run configs and family plans)."""
