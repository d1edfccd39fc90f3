"""List decoding over adversarial q-ary channels with full or minimal feedback."""

__version__ = "0.1.0"
