"""
Diagnostic Accuracy under Partial Verification

Estimates sensitivity, specificity, PPV and NPV of a binary index test when
only some patients received the gold standard, and corrects the resulting
verification bias.

Data Module (vbias_system.data):
- Patient-level datasets and the verification cross-table
- Synthetic cohorts with MCAR/MAR/MNAR verification

Estimators Module (vbias_system.estimators):
- Complete case analysis, Begg-Greenes and extended Begg-Greenes
- Multiple imputation with Rubin's rules
- EM with disease, test and verification models
- Wald, Rubin and BCa bootstrap intervals

Usage:
    from vbias_system.data import load_cad_spect, cross_table
    from vbias_system.estimators import cca, bg, ebg, acc_mi, acc_em
"""

from .common import log, set_quiet_mode

__version__ = "1.0.0"
__author__ = "vbias_system developers"
__all__ = ["log", "set_quiet_mode"]
