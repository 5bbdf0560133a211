"""Spectrum, bound-state amplitudes and emitter dynamics."""
from _common import execute, parser

JOBS = [
    ("bands_n41", "bands", dict(N=41)),
    ("dynamics", "dynamics", dict(t_max=100.0, t_step=0.1)),
    ("dynamics_dephased", "dynamics", dict(t_max=100.0, t_step=0.5, gamma=0.05)),
]

if __name__ == "__main__":
    execute(parser(__doc__).parse_args(), JOBS)
