"""Bayesian estimation: error vs time, error vs true value, posterior snapshots."""
from _common import execute, parser

JOBS = [
    ("time_g", "bayes-time", dict(which="g", t_min=10.0, t_max=100.0, t_step=2.0)),
    ("time_delta", "bayes-time", dict(which="delta", t_min=10.0, t_max=100.0, t_step=2.0)),
    ("range_g", "bayes-range", dict(which="g", times=[25.0, 50.0, 100.0],
                                    truths=[0.04, 0.06, 0.08, 0.1, 0.12, 0.14, 0.16])),
    ("range_delta", "bayes-range", dict(which="delta", times=[25.0, 50.0, 100.0],
                                        truths=[0.1, 0.15, 0.2, 0.25, 0.3, 0.35])),
    ("posterior_g", "posterior", dict(which="g", times=[20.0, 50.0, 100.0])),
    ("posterior_delta", "posterior", dict(which="delta", times=[20.0, 50.0, 100.0])),
]

if __name__ == "__main__":
    execute(parser(__doc__).parse_args(), JOBS)
