"""Analytical performance/energy explorer for a systolic CNN-training
accelerator with stacked-NVM weight storage, plus a desk-scale RL testbed."""

__version__ = "0.1.0"

from .netspec import (LayerSpec, NetworkSpec, PlacementMap, TrainingPolicy,
                      assign_placement, default_network, infer_shapes,
                      trainable_fraction, weight_footprint)
from .mapper import (MappingPlan, PEArrayConfig, plan_conv_backward_gemm,
                     plan_conv_forward, plan_fc_backward, plan_fc_forward,
                     plan_phase)
from .costmodel import (ComputeEnergyParams, CostReport, MemoryTechParams,
                        TrainingCost, compare_policies, fps_sweep,
                        iteration_cost, layer_cost)
from .envelope import FlightParams, frame_distance, max_velocity, min_fps
from .reference import ReferenceTable, compare_from_reference, load_reference_table

# nvmrlsim.calibrate pulls scipy; import it explicitly where needed.
