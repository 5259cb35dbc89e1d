"""Maximal reverse top-k queries in two dimensions via a k-polygon index."""

from mrtop.baselines import oracle_mrtop, wang_mrtop
from mrtop.core import (AngularInterval, DataTuple, Direction, DualLine, Point,
                        direction_of, dual_transform, line_intersection,
                        passes_above, rank)
from mrtop.index import (KPolygonIndex, PolygonVertex, build_index, build_polygon,
                         deserialize_index, serialize_index, sort_by_x_intercept)
from mrtop.ingest import Dataset, gen_synthetic, load_csv, preprocess
from mrtop.query import MrtopResult, merge_adjacent, mrtop_query
from mrtop.skyband import approximate_skyband, exact_skyband

__all__ = [
    "AngularInterval", "DataTuple", "Dataset", "Direction", "DualLine",
    "KPolygonIndex", "MrtopResult", "Point", "PolygonVertex",
    "approximate_skyband", "build_index", "build_polygon", "deserialize_index",
    "direction_of", "dual_transform", "exact_skyband", "gen_synthetic",
    "line_intersection", "load_csv", "merge_adjacent", "mrtop_query",
    "oracle_mrtop", "passes_above", "preprocess", "rank", "serialize_index",
    "sort_by_x_intercept", "wang_mrtop",
]
