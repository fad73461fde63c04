//! Scenario ingestion, experiment sweeps, and result emission.
