"""matcast: exemplar-based material transfer for 2D images.

Transfers the surface appearance of a material exemplar onto a masked
object in an input image by orchestrating three conditioning branches --
a material embedding of the exemplar, a depth map of the input, and a
foreground-grayscaled init image that keeps shading cues while dropping
the object's base color -- through an inpainting generator, then pastes
the result back onto the untouched background.

Ships fully deterministic mock backends so every pipeline property is
testable without accelerators; real model bindings plug in through the
backend registry.
"""

__version__ = "0.1.0"
