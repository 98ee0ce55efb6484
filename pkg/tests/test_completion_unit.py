import itertools
import random

import pytest

from offsim.offload import JobCompletionUnit, ProtocolError


def test_counts_to_programmed_value():
    jcu = JobCompletionUnit()
    jcu.program(4)
    assert [jcu.arrive() for _ in range(4)] == [False, False, False, True]
    assert jcu.interrupt_pending


def test_single_cluster_job():
    jcu = JobCompletionUnit()
    jcu.program(1)
    assert jcu.arrive() is True


def test_counter_auto_resets_for_next_job():
    jcu = JobCompletionUnit()
    jcu.program(2)
    jcu.arrive()
    assert jcu.arrive() is True
    assert (jcu.offload, jcu.arrivals) == (0, 0)
    jcu.clear_interrupt()
    jcu.program(3)  # immediately reusable
    assert [jcu.arrive() for _ in range(3)] == [False, False, True]


def test_arrival_without_job_rejected():
    with pytest.raises(ProtocolError):
        JobCompletionUnit().arrive()


def test_reprogramming_mid_job_rejected():
    jcu = JobCompletionUnit()
    jcu.program(3)
    jcu.arrive()
    with pytest.raises(ProtocolError):
        jcu.program(5)


def test_clear_without_interrupt_rejected():
    with pytest.raises(ProtocolError):
        JobCompletionUnit().clear_interrupt()


def test_program_validation():
    with pytest.raises(ValueError):
        JobCompletionUnit().program(0)


def test_deferred_interrupt():
    # job 2 completes while job 1's interrupt is still unserviced: its
    # interrupt is held back and fires at the acknowledge, never lost
    jcu = JobCompletionUnit()
    jcu.program(1)
    assert jcu.arrive() is True
    jcu.program(2)
    jcu.arrive()
    assert jcu.arrive() is False  # deferred, not dropped
    assert jcu.clear_interrupt() is True
    assert jcu.interrupt_pending
    assert jcu.clear_interrupt() is False
    assert not jcu.interrupt_pending


def test_exhaustive_small_jobs():
    # arrival messages are indistinguishable, but walk every arrival order
    # anyway: exactly one interrupt, always on the last message
    for n in (1, 2, 3, 4):
        for order in itertools.permutations(range(n)):
            jcu = JobCompletionUnit()
            jcu.program(n)
            fires = [jcu.arrive() for _ in order]
            assert fires == [False] * (n - 1) + [True]
            jcu.clear_interrupt()


def test_randomized_wide_jobs():
    rng = random.Random(42)
    for _ in range(50):
        n = rng.randrange(1, 33)
        jcu = JobCompletionUnit()
        jcu.program(n)
        fires = [jcu.arrive() for _ in range(n)]
        assert sum(fires) == 1 and fires[-1]
        assert jcu.clear_interrupt() is False


def test_back_to_back_jobs_one_interrupt_each():
    jcu = JobCompletionUnit()
    for n in (1, 4, 32):
        jcu.program(n)
        fires = [jcu.arrive() for _ in range(n)]
        assert sum(fires) == 1
        jcu.clear_interrupt()
