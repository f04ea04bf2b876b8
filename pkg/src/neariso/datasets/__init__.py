"""Bundled example datasets, one loader per file.

Each loader parses the packaged CSV with :func:`neariso.read_dataset`
and returns a :class:`neariso.Dataset`; the CSV comment headers carry
each dataset's provenance.  The files are small and ship inside the
package so the documentation examples and the command line demos run
without network access.
"""
from __future__ import annotations

from importlib import resources

from ..dataio import Dataset, read_dataset

__all__ = [
    "load_gaussian_series",
    "load_binomial_counts",
    "load_chi_square_stats",
    "load_sunspot_series",
    "load_drinking_age_rates",
]


def _load(name: str) -> Dataset:
    ref = resources.files(__package__).joinpath(name)
    with ref.open("rb") as handle:
        return read_dataset(handle)


def load_gaussian_series() -> Dataset:
    """200-point two-ramp series with unit-variance Gaussian noise."""
    return _load("gaussian_series.csv")


def load_binomial_counts() -> Dataset:
    """100 binomial success counts; the weight column holds the trials."""
    return _load("binomial_counts.csv")


def load_chi_square_stats() -> Dataset:
    """100 chi-square statistics; the weight column holds the degrees of freedom."""
    return _load("chi_square_stats.csv")


def load_sunspot_series() -> Dataset:
    """98-point annual series whose spectrum has a marked decade-scale peak."""
    return _load("sunspot_series.csv")


def load_drinking_age_rates() -> Dataset:
    """48 monthly death rates by age bin spanning a legal threshold at 21."""
    return _load("drinking_age_rates.csv")
