"""Fisher information traces, parameter insets and finite-size comparison."""
from _common import execute, parser

JOBS = [
    ("fisher_g", "fisher", dict(which="g", scan=[0.15, 0.2, 0.3])),
    ("fisher_delta", "fisher", dict(which="delta", scan=[0.05, 0.1, 0.15])),
    ("finite_size", "finite-size", dict(which="g", sizes=[100, 400], t_max=200.0)),
]

if __name__ == "__main__":
    execute(parser(__doc__).parse_args(), JOBS)
