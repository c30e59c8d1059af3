import os
import json
import math
import sys
from pathlib import Path
import numpy as np
from tqdm import tqdm
from glstoolkit.exceptions import PreconditionError


DEFAULT_NODES = 512
DEFAULT_PMAX = 2.**10
DOMINATION_PMAX = 1e12
REFINEMENT_TOL = 1e-10
GRID_SLACK = 0.02
MONTE_CARLO_SLACK = 0.05
PMAX_VARIABLE = 'GLS_TOOLKIT_PMAX'


def get_pmax():
    """Gets the truncation cap of the p-grid used when the support bound is infinite.

    The value of the ``GLS_TOOLKIT_PMAX`` environment variable takes precedence
    over the built-in default of 2**10.

    :return: The truncation cap.
    :rtype: float
    """
    raw = os.environ.get(PMAX_VARIABLE)
    if raw is None or raw.strip() == '':
        return DEFAULT_PMAX
    try:
        value = float(raw)
    except ValueError:
        raise PreconditionError('{} must be a number, got {!r}'.format(PMAX_VARIABLE, raw))
    if not value > 1 or value == float('inf'):
        raise PreconditionError('{} must be a finite number > 1, got {}'.format(PMAX_VARIABLE, value))
    return value


def finite_or_none(data):
    """Replaces non-finite numbers in a nested report by None.

    :param data: Dicts, lists, tuples, numpy values and scalars.
    :return: The same structure with plain Python numbers.
    """
    if isinstance(data, dict):
        return {k: finite_or_none(v) for k, v in data.items()}
    if isinstance(data, (list, tuple)):
        return [finite_or_none(v) for v in data]
    if isinstance(data, np.ndarray):
        return finite_or_none(data.tolist())
    if isinstance(data, (bool, np.bool_)):
        return bool(data)
    if isinstance(data, (int, np.integer)):
        return int(data)
    if isinstance(data, (float, np.floating)):
        return float(data) if math.isfinite(data) else None
    return data


def to_json(data):
    """Serializes a report as strict JSON, with null for non-finite numbers.
    """
    return json.dumps(finite_or_none(data), sort_keys=True, indent=2, allow_nan=False)


def check_files(files):
    """Checks if the sample file paths are valid.

    :param files: The paths to check.
    :type files: list
    :return: True if every file exists and has a supported extension.
    :rtype: bool
    """
    for file in files:
        file = str(Path(file).resolve())
        if not os.path.exists(file):
            print('Error: {} does not exist'.format(file), file=sys.stderr)
            return False
        if not (file.endswith('.csv') or file.endswith('.json')):
            print('Error: {} is not a valid file'.format(file), file=sys.stderr)
            print('Valid file types are .csv and .json', file=sys.stderr)
            return False
    return True


class ProgressBar:
    """A progress bar for long simulations, written to stderr.
    """

    def __init__(self, stream=None):
        """Initializes the progress bar.

        :param stream: The stream to write to. Defaults to stderr.
        :type stream: file, optional
        """
        self.pbar = None
        self.total = 0
        self.stream = stream if stream is not None else sys.stderr
        self.interactive = self.stream.isatty()


    def reset_progress(self):
        """Resets the progress bar.
        """
        self.pbar = None
        self.total = 0


    def increment_progress(self):
        """Increments the progress bar.
        """
        if self.interactive:
            if self.pbar is None and self.total > 0:
                self.pbar = tqdm(total=self.total, file=self.stream)
            if self.pbar is not None:
                if self.pbar.n + 1 <= self.total:
                    self.pbar.update(1)


    def set_maximum_value(self, value):
        """Sets the maximum value of the progress bar.

        :param value: The number of increments expected.
        :type value: int
        """
        self.total = value


    def signal_finished(self):
        """Signals that the progress bar is finished.
        """
        if self.pbar is not None:
            self.pbar.n = self.total
            self.pbar.close()
            self.pbar = None


    def print_update(self, text):
        """Prints text sent to the progress bar.

        :param text: The text to print.
        :type text: str
        """
        print(text, file=self.stream)


    def sync_status(self, update=None, increment=False):
        """Synchronizes the status of the task with the progress bar.

        :param update: The update to be printed
        :type update: str
        :param increment: Whether to increment the progress bar
        :type increment: bool
        """
        if update:
            self.print_update(update)
        if increment:
            self.increment_progress()
