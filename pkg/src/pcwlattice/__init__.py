"""Subwavelength atom lattices and photon-mediated spin models near photonic-crystal slabs."""
__version__ = "0.1.0"
