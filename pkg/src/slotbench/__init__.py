"""slotbench: benchmarks for slot-based object-centric autoencoders on
style-transferred multi-object scenes."""

__version__ = "0.1.0"
