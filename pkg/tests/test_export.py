import json

import numpy as np
import pytest

from auctionlab import svg
from auctionlab.agents import AgentConfig
from auctionlab.dynamics import RunConfig, run
from auctionlab.export import (bid_log_header, joint_from_csv, joint_to_csv, read_bid_log, to_json,
                               write_bid_log)
from auctionlab.grid import BidGrid, JointBidDistribution
from auctionlab.rules import AuctionRule


@pytest.fixture(scope="module")
def record():
    agents = [AgentConfig("MWLinear", 1.0), AgentConfig("MWLinear", 0.5)]
    return run(RunConfig(AuctionRule("GSP"), agents, 3000, seed=1, true_values=(0.9, 0.6)))


def test_joint_round_trip(record):
    body, meta = joint_to_csv(record.joint_empirical)
    back = joint_from_csv(body, meta)
    assert np.allclose(back.probs, record.joint_empirical.probs, atol=1e-15)
    assert back.grids == record.joint_empirical.grids


@pytest.mark.parametrize("body,msg", [
    ("a,b\n", "row 1"),
    ("i,j,prob\n0,0\n", "row 2"),
    ("i,j,prob\n0,0,1\n99,0,0\n", "row 3"),
    ("i,j,prob\n0,0,-1\n", "row 2"),
    ("i,j,prob\n0,0,0.3\n", "sum"),
])
def test_joint_parse_errors(body, msg):
    with pytest.raises(ValueError, match=msg):
        joint_from_csv(body, '{"epsilon": 0.5, "max_bid": 1.0}')


def test_bid_log_round_trip(record, tmp_path):
    p = write_bid_log(record, tmp_path / "log.csv")
    data = read_bid_log(p)
    header = bid_log_header(2)
    assert p.read_text().splitlines()[0] == ",".join(header)
    assert np.allclose(data[:, 1:3], record.bids_money())
    assert np.array_equal(data[:, 3] - 1, record.winners())
    assert np.allclose(data[:, 8:10], record.u_user)


def test_json_cleaning():
    text = to_json({"a": np.float64(np.nan), "b": np.arange(3), "c": (1, 2.5)})
    assert json.loads(text) == {"a": None, "b": [0, 1, 2], "c": [1, 2.5]}


def test_svgs_are_deterministic(record):
    for fn in (svg.bid_dynamics, svg.marginals, svg.joint_heatmap):
        a, b = fn(record), fn(record)
        assert a == b
        assert 'viewBox="0 0 800 500"' in a
        assert "<dc:date>" not in a
    p = svg.payoff_curves([1, 2], [0.1, 0.2], [0.01, 0.01], [0.3, 0.2], [0.01, 0.02], "v",
                          analytic=([1, 2], [0.1, 0.2], [0.3, 0.2]))
    assert p == svg.payoff_curves([1, 2], [0.1, 0.2], [0.01, 0.01], [0.3, 0.2], [0.01, 0.02], "v",
                                  analytic=([1, 2], [0.1, 0.2], [0.3, 0.2]))
