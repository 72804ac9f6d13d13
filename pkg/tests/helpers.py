import numpy as np

from hybridnav import neuralq as nq


def constant_model(value, window_length=200, seed=0):
    """Network whose output is ``value`` for every input."""
    arch = nq.Architecture(window_length=window_length)
    p = nq.NetworkParams.initialize(arch, seed)
    last = f"dense{len(arch.hidden) + 1}"
    p.tensors[f"{last}.w"][:] = 0.0
    p.tensors[f"{last}.b"][:] = value
    return p


def tiny_arch(n=20, norm="joint"):
    return nq.Architecture(window_length=n, conv=((3, 5), (2, 3), (2, 2)), hidden=(4, 3),
                           norm=norm)
