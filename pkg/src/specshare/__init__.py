"""Spectrum sharing simulation for satellite and terrestrial networks.

Subpackages cover orbital geometry (:mod:`specshare.geom`), resource-block
bookkeeping (:mod:`specshare.spectrum`), the GEO/LEO cognitive reuse engine
(:mod:`specshare.geoleo`), terrestrial-interference SINR and radio environment
maps (:mod:`specshare.ntniot`), the cooperative bandwidth game
(:mod:`specshare.game`) and the spectrum marketplace (:mod:`specshare.market`).
"""

__version__ = "0.1.0"
