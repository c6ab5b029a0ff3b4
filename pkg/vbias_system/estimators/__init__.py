"""Accuracy estimators for partially verified data."""
from .logit import DesignSpec, LogitFit, fit, predict_prob
from .closed import MEASURES, AccuracyResult, MeasureEstimate, bg, cca, ebg
from .mi import MiPooled, acc_mi, default_m, impute_once
from .em import EmState, PseudoData, acc_em, build_pseudo_data, e_step, m_step
from .uncertainty import (
    BootResult,
    bca_interval,
    bootstrap_accuracy,
    normal_quantile,
    t_quantile,
)

__all__ = [
    "DesignSpec",
    "LogitFit",
    "fit",
    "predict_prob",
    "MEASURES",
    "AccuracyResult",
    "MeasureEstimate",
    "cca",
    "bg",
    "ebg",
    "MiPooled",
    "acc_mi",
    "default_m",
    "impute_once",
    "EmState",
    "PseudoData",
    "acc_em",
    "build_pseudo_data",
    "e_step",
    "m_step",
    "BootResult",
    "bca_interval",
    "bootstrap_accuracy",
    "normal_quantile",
    "t_quantile",
]
