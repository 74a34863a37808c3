"""Counter-based deterministic random stream.

Every rand() call in a script is reproducible from (seed, oid, tick, k) where
k counts the calls made by that agent during the tick (query phase first, the
update phase continues the same counter).  No state is carried between ticks,
which is what makes checkpoint replay and worker-count independence possible.
"""

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def tick_rand(seed: int, oid: int, tick: int, k: int) -> float:
    """The k-th rand() value for agent oid at the given tick, in [0, 1)."""
    h = _mix(seed + _GAMMA)
    h = _mix(h ^ _mix(oid + _GAMMA))
    h = _mix(h ^ _mix(tick + 2 * _GAMMA))
    h = _mix(h ^ _mix(k + 3 * _GAMMA))
    return (h >> 11) * (2.0 ** -53)


def make_agent_rand(seed: int, oid: int, tick: int):
    """A zero-arg callable yielding the agent's rand() stream for one tick."""
    state = [0]

    def _rand() -> float:
        k = state[0]
        state[0] = k + 1
        return tick_rand(seed, oid, tick, k)

    return _rand


def spawn_oid(parent_oid: int, tick: int) -> int:
    """Deterministic oid for an agent spawned by parent_oid at tick.

    Order-independent (no global counter), so results do not depend on worker
    count or iteration order.  The high bit region separates spawned ids from
    initializer-assigned ids; collisions are astronomically unlikely and are
    checked for at runtime.
    """
    h = _mix(parent_oid + 5 * _GAMMA)
    h = _mix(h ^ _mix(tick + 7 * _GAMMA))
    return (1 << 62) | (h & ((1 << 62) - 1))
