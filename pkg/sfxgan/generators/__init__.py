"""Networks, training and synthesis."""
