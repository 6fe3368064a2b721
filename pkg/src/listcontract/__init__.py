"""Uniform linked-list contraction on a checked EREW PRAM simulator."""

from .errors import (BatchDependenceError, ContractPreconditionError,
                     ErewViolationError, ForestFormatError,
                     ImproperColoringError, ListContractError,
                     OrientationError, UncoveredCaseError)
from .pram import AccessLog, Engine, Memory, PramConfig, RoundMetrics, Task
from .model import (Checkpoint, ContractionLog, LinkedForest, Machine,
                    TwoRowArray, layout)
from .coloring import ColorAssignment, dct_new_colors, three_color
from .pairing import PairAssignment, eliminate_twos, form_pairs
from .localize import CutSet, RunRecord, find_runs, localize
from .uniform import (detect_marks, enforce_uniformity, opposite_pair_shortcut,
                      publish_mailboxes, row_color_and_pair)
from .orientation import (OrientationKey, contract_along_orientation,
                          derive_orientation, fold_array, grid_dump,
                          pool_short_lists, uniform_contraction_pass)
from .ranking import (RankResult, RankRun, contract_to_threshold, list_rank,
                      pointer_jump, replay_ranks, sequential_rank, wyllie_rank)
from .workloads import Workload, generate

__all__ = [name for name in dir() if not name.startswith("_")]
