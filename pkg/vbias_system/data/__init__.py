"""
Verification-Bias Data Module

Patient-level data, the verification cross-table, and synthetic cohorts.

Core components:
- dataset: Dataset / Record / VerificationTable, CSV loading and saving
- simgen: Synthetic cohorts with known truth and MCAR/MAR/MNAR verification
"""

_DATASET_NAMES = (
    "Record", "Dataset", "VerificationTable", "load_dataset", "dump_dataset",
    "load_cad_spect", "cross_table", "missing_percentage", "CAD_SPECT_PATH",
)
_SIMGEN_NAMES = (
    "CovariateSpec", "SimSpec", "SimulationResult", "generate", "load_sim_spec",
)


# Lazy imports to avoid RuntimeWarning with -m execution
def __getattr__(name):
    if name in _DATASET_NAMES:
        from . import dataset
        return getattr(dataset, name)
    elif name in _SIMGEN_NAMES:
        from . import simgen
        return getattr(simgen, name)
    raise AttributeError(f"module '{__name__}' has no attribute '{name}'")

__all__ = list(_DATASET_NAMES + _SIMGEN_NAMES)
