"""2D special-relativistic hydrodynamics with single-stage Lax-Wendroff
flux reconstruction on adaptively refined curved quadrilateral meshes."""

__version__ = "0.1.0"
