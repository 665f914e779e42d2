"""AIC / BIC / ICL over a sweep of fixed-K fits."""

import logging
import math

import numpy as np
from scipy import special

from bgcwm.core.exceptions import EmptyArchiveError, MissingComponentError
from bgcwm.models.schemas import CriterionReport, CriterionRow
from bgcwm.models.state import Dataset, DrawArchive
from bgcwm.services.allocation import allocation_probs

logger = logging.getLogger(__name__)


def parameter_count(K: int, p: int) -> int:
    """d(K) = K(1 + p + 1 + p + p(p+1)/2) + (K - 1)."""
    return K * (2 + 2 * p + p * (p + 1) // 2) + (K - 1)


def allocation_entropy(probs: np.ndarray) -> float:
    return float(np.sum(special.entr(probs)))


def criterion_row(archive: DrawArchive, data: Dataset) -> CriterionRow:
    """Plug-in criteria at the retained draw with the largest observed log-likelihood."""
    if not archive.draws:
        raise EmptyArchiveError("Criteria need at least one retained draw")
    best = max(archive.draws, key=lambda draw: draw.loglik)
    K = best.K
    d = parameter_count(K, data.p)
    entropy = allocation_entropy(allocation_probs(data, best.state))
    aic = -2.0 * best.loglik + 2.0 * d
    bic = -2.0 * best.loglik + d * math.log(data.n)
    return CriterionRow(k=K, d=d, loglik=best.loglik, aic=aic, bic=bic, icl=bic + 2.0 * entropy, entropy=entropy)


def evaluate_criteria(archives: list[DrawArchive], data: Dataset) -> CriterionReport:
    rows = sorted((criterion_row(archive, data) for archive in archives), key=lambda row: row.k)
    if not rows:
        raise EmptyArchiveError("No archives supplied to the criteria sweep")
    present = [row.k for row in rows]
    missing = sorted(set(range(present[0], present[-1] + 1)) - set(present))
    duplicated = sorted({k for k in present if present.count(k) > 1})
    if missing or duplicated:
        raise MissingComponentError(f"K sweep is not contiguous: missing {missing}, duplicated {duplicated}")
    selected = {
        name: min(rows, key=lambda row: (getattr(row, name), row.k)).k for name in ("aic", "bic", "icl")
    }
    logger.info(f"Criteria over K={present[0]}..{present[-1]} select {selected}")
    return CriterionReport(rows=rows, selected=selected)
