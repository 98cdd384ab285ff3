"""Private helper engines: runtime typing, logging, contract-checked tabular reads."""
