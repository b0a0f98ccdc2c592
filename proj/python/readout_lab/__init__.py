# Copyright 2026 The Readout Lab Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Python bindings for the readout-lab C++ core."""

from ._readout_lab import (
    __version__,
    bimodal_sweep,
    calibration_suite,
    ece,
    eps_inclusion_margin,
    fit_prototypes,
    fit_ridge,
    flag_interior,
    hull_distance,
    prototype_logits,
    ridge_logits,
    run_worked_examples,
    temperature_fit,
    train_bimodal_demo,
    translation_sweep,
    truncated_svd,
)

__all__ = [
    "__version__",
    "bimodal_sweep",
    "calibration_suite",
    "ece",
    "eps_inclusion_margin",
    "fit_prototypes",
    "fit_ridge",
    "flag_interior",
    "hull_distance",
    "prototype_logits",
    "ridge_logits",
    "run_worked_examples",
    "temperature_fit",
    "train_bimodal_demo",
    "translation_sweep",
    "truncated_svd",
]
