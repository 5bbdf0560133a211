"""Bond disorder, emitter dephasing and the even-length chain."""
from _common import execute, parser

TIMES = dict(t_min=10.0, t_max=100.0, t_step=2.0)
JOBS = [
    ("disorder_w0.1", "disorder", dict(W=0.1, **TIMES)),
    ("disorder_w0.2", "disorder", dict(W=0.2, **TIMES)),
    ("dephasing_0.05", "dephasing", dict(gamma=0.05, t_min=20.0, t_max=80.0, t_step=5.0)),
    ("dephasing_0.2", "dephasing", dict(gamma=0.2, t_min=20.0, t_max=80.0, t_step=5.0)),
    ("even_n200", "even-n", dict(N=200, **TIMES)),
]

if __name__ == "__main__":
    execute(parser(__doc__).parse_args(), JOBS)
