"""Loading real crowdsourcing datasets and scoring predictions against truth.

Labels file: ``task_id<sep>worker_id<sep>label`` per line.  Truth file:
``task_id<sep>label``.  The separator (tab or comma) is detected on the
first line; a first line whose label field is not an integer is a header.
Labels may use any contiguous integer range; they are shifted to
``1..L`` and merged into two classes, ``l <= L/2 -> +1`` and ``l > L/2 -> -1``.
"""

from dataclasses import dataclass
import logging
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)


class DatasetError(ValueError):
    """Malformed or inconsistent dataset files."""


@dataclass(frozen=True)
class RawLabelRecord:
    task_id: str
    worker_id: str
    label: int


@dataclass(frozen=True)
class Dataset:
    matrix: np.ndarray
    truth: np.ndarray
    task_ids: tuple
    worker_ids: tuple

    @property
    def n(self):
        return self.matrix.shape[1]

    @property
    def t(self):
        return self.matrix.shape[0]

    @property
    def label_count(self):
        return int(np.count_nonzero(self.matrix))

    @property
    def alpha_hat(self):
        return self.label_count / (self.n * self.t)


def binarize(labels, L):
    """Merge labels in ``1..L`` into ±1: ``l <= L/2`` is +1, the rest -1."""
    labels = np.asarray(labels)
    if L < 2:
        raise DatasetError(f"need at least two label values, got L={L}")
    if labels.size and (labels.min() < 1 or labels.max() > L):
        raise DatasetError(f"labels outside 1..{L}")
    return np.where(2 * labels <= L, 1, -1).astype(np.int8)


def _split(line, sep):
    return [field.strip() for field in line.split(sep)]


def _is_int(text):
    try:
        int(text)
    except ValueError:
        return False
    return True


def _read_rows(path, width):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    lines = [(k, line) for k, line in enumerate(text.splitlines(), 1) if line.strip()]
    if not lines:
        raise DatasetError(f"{path}: empty file")
    sep = "\t" if "\t" in lines[0][1] else ","
    first = _split(lines[0][1], sep)
    if len(first) == width and not _is_int(first[-1]):
        lines = lines[1:]
    rows = []
    for lineno, line in lines:
        fields = _split(line, sep)
        if len(fields) != width or not all(fields) or not _is_int(fields[-1]):
            raise DatasetError(f"{path}:{lineno}: malformed row {line!r}")
        rows.append((*fields[:-1], int(fields[-1])))
    if not rows:
        raise DatasetError(f"{path}: no records")
    return rows


def read_label_records(path):
    return [RawLabelRecord(*row) for row in _read_rows(path, 3)]


def read_truth(path):
    return {task: label for task, label in _read_rows(path, 2)}


def build_dataset(records, truth):
    """Assemble the dense ±1/0 matrix from raw records and a truth mapping.

    Tasks and workers are indexed by first appearance.  A repeated
    (task, worker) pair keeps its last label.  Truth for tasks without any
    label is dropped; a labelled task without truth is an error.
    """
    if not records:
        raise DatasetError("no label records")
    tasks = {}
    workers = {}
    cells = {}
    for rec in records:
        i = tasks.setdefault(rec.task_id, len(tasks))
        j = workers.setdefault(rec.worker_id, len(workers))
        cells[i, j] = rec.label
    missing = [task for task in tasks if task not in truth]
    if missing:
        raise DatasetError(f"no ground truth for tasks: {', '.join(missing)}")
    extra = len(set(truth) - set(tasks))
    if extra:
        logger.warning("ignoring ground truth for %d unlabelled tasks", extra)

    truth_raw = np.array([truth[task] for task in tasks])
    values = np.fromiter(cells.values(), dtype=np.int64, count=len(cells))
    lo = min(values.min(), truth_raw.min())
    hi = max(values.max(), truth_raw.max())
    L = max(int(hi - lo) + 1, 2)

    matrix = np.zeros((len(tasks), len(workers)), dtype=np.int8)
    idx = np.array(list(cells.keys()))
    matrix[idx[:, 0], idx[:, 1]] = binarize(values - lo + 1, L)
    return Dataset(matrix=matrix, truth=binarize(truth_raw - lo + 1, L),
                   task_ids=tuple(tasks), worker_ids=tuple(workers))


def load_labels(labels_path, truth_path):
    """Read a labels file and a truth file into a `Dataset`."""
    return build_dataset(read_label_records(labels_path), read_truth(truth_path))


def save_dataset(dataset, labels_path, truth_path):
    """Write `dataset` in canonical form: tab separated, 1 for +1 and 2 for -1.

    Loading the written files gives back an identical dataset.
    """
    code = {1: 1, -1: 2}
    with open(labels_path, "w", encoding="utf-8") as fh:
        for i, task in enumerate(dataset.task_ids):
            for j in np.flatnonzero(dataset.matrix[i]):
                fh.write(f"{task}\t{dataset.worker_ids[j]}\t{code[int(dataset.matrix[i, j])]}\n")
    with open(truth_path, "w", encoding="utf-8") as fh:
        for task, g in zip(dataset.task_ids, dataset.truth):
            fh.write(f"{task}\t{code[int(g)]}\n")


def evaluate(predictions, truth):
    """Fraction of tasks where the prediction differs from the truth."""
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    if predictions.shape != truth.shape:
        raise ValueError("predictions and truth differ in length")
    if truth.size == 0:
        raise ValueError("nothing to evaluate")
    return float(np.mean(predictions != truth))
