#!/usr/bin/env python3
"""
Tests for seeded replica batches
"""
import math

import pytest

from batch_processor import ReplicaBatchProcessor, replica_rng, summarize


def test_replica_streams_are_reproducible_and_distinct():
    assert replica_rng(7, 3).random() == replica_rng(7, 3).random()
    assert replica_rng(7, 3).random() != replica_rng(7, 4).random()
    assert replica_rng(7, 3).random() != replica_rng(8, 3).random()


def test_results_come_back_in_replica_order():
    processor = ReplicaBatchProcessor()
    results = processor.process_batch(lambda rng, index: (index, rng.random()), 20, seed=5,
                                      show_progress=False)
    assert [index for index, _ in results] == list(range(20))
    again = ReplicaBatchProcessor().process_batch(lambda rng, index: (index, rng.random()), 20,
                                                  seed=5, show_progress=False)
    assert results == again


def test_progress_callback_reports_every_stage():
    updates = []
    ReplicaBatchProcessor().process_batch(lambda rng, index: index, 3, seed=1,
                                          progress_callback=updates.append, show_progress=False)
    assert [u['status'] for u in updates] == ['started', 'processing', 'processing',
                                              'processing', 'completed']
    assert updates[2]['progress'] == pytest.approx(200 / 3)
    assert updates[-1]['processed'] == 3


def test_stop_interrupts_the_batch():
    processor = ReplicaBatchProcessor()

    def task(rng, index):
        if index == 2:
            processor.stop()
        return index

    assert processor.process_batch(task, 10, seed=0, show_progress=False) == [0, 1, 2]
    assert not processor.is_processing


def test_summarize():
    summary = summarize([1.0, 2.0, 3.0, 4.0])
    assert summary['mean'] == 2.5
    assert summary['se'] == pytest.approx(math.sqrt(5 / 3) / 2)
    assert summary['count'] == 4
    assert summarize([3.0]) == {'mean': 3.0, 'se': 0.0, 'count': 1}
    assert math.isnan(summarize([])['mean'])
