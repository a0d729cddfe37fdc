"""rtlforge: minimal-error Verilog augmentation, validity classification,
and boundary-gated screening decoding."""

__version__ = "0.1.0"
