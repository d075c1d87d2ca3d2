//! Experiment harness behind the command line interface.
