"""siclab: Weyl-Heisenberg SIC fiducials, their moment-map geometry and overlap arithmetic."""

__version__ = '0.1.0'
