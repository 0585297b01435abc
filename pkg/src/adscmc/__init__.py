"""Constant mean curvature spacelike surfaces in anti-de Sitter 3-space.

Submodules:

- ads: the quadric model, its 2x2 matrix picture, isometries, boundary rulings
- boundary: circle maps, cross-ratio distortion, acausal boundary curves
- mesh: polar finite volume mesh on the hyperbolic disk
- solver: damped Newton solver for the CMC graph equation and H-sweeps
- geometry: discrete fundamental forms, curvature checks, equidistant flow
- extension: ruling projections, dilatation measurement, landslide angle
- runio: deterministic CSV / manifest output
- validate: invariant battery over a finished run
- cli: command line entry point (solve / sweep / validate / export)
"""

__version__ = "0.1.0"
