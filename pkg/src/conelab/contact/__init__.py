"""Sliding-cone contact sets and the quantities built on them."""

from .transform import (ContactSet, TouchingSets, slide_transform,
                        slide_transform_reference, touching_sets, cone_penalty)
from .opening import OpeningField, DecayCurve, opening_function, decay_curve, fit_decay
from .vertexmap import VertexMap, vertex_map
from .convolution import inf_convolution, sup_convolution
from .maximal import maximal_function, default_radii
from .seminorm import seminorm_field, anchored_minimax, FIT_SLACK

__all__ = [
    "ContactSet", "TouchingSets", "slide_transform", "slide_transform_reference",
    "touching_sets", "cone_penalty", "OpeningField", "DecayCurve", "opening_function",
    "decay_curve", "fit_decay", "VertexMap", "vertex_map", "inf_convolution",
    "sup_convolution", "maximal_function", "default_radii", "seminorm_field",
    "anchored_minimax", "FIT_SLACK",
]
