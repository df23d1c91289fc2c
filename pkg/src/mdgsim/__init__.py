"""MDL/MDG estimation from MMSE MIMO equalizers in coupled SDM links."""

__version__ = "0.1.0"
