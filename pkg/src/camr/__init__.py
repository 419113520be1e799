"""Coded aggregated MapReduce: resolvable-design placement and a three-stage coded shuffle."""

from camr.analysis import camr_loads, ccdc_load, min_jobs, reconcile, uncoded_baseline_load
from camr.design import (
    DesignParams,
    build_design,
    build_spc_matrix,
    enumerate_stage2_groups,
    intersect_blocks,
    owners_of_job,
)
from camr.placement import batch_of, place, storage_fraction
from camr.simulation import simulate

__all__ = [
    "DesignParams", "build_design", "build_spc_matrix", "enumerate_stage2_groups",
    "intersect_blocks", "owners_of_job", "place", "batch_of", "storage_fraction",
    "simulate", "camr_loads", "ccdc_load", "min_jobs", "reconcile", "uncoded_baseline_load",
]
