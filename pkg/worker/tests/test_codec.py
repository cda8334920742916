"""Worker-side genotype parser against the documented string format."""

from __future__ import annotations

import pytest

from archon_worker.codec import CodecError, parse_genotype

GOOD = "v1;ops=gcn,sage;dim=128;act=elu;drop=0.25;skips=0-1,1-2;pool=none;lr=0.005;wd=0;ep=300"


def test_parses_canonical_string():
    g = parse_genotype(GOOD)
    assert g.layers == ("gcn", "sage")
    assert g.hidden_dim == 128
    assert g.activation == "elu"
    assert g.dropout == 0.25
    assert g.skips == ((0, 1), (1, 2))
    assert g.lr == 0.005
    assert g.weight_decay == 0.0
    assert g.epochs == 300


def test_empty_skips():
    g = parse_genotype("v1;ops=gin;dim=16;act=tanh;drop=1.00;skips=;pool=none;"
                       "lr=0.001;wd=0.001;ep=100")
    assert g.skips == ()


@pytest.mark.parametrize("bad,segment", [
    ("v2;ops=gcn;dim=64;act=relu;drop=0.50;skips=;pool=none;lr=0.01;wd=0;ep=100", "version"),
    ("v1;ops=dense;dim=64;act=relu;drop=0.50;skips=;pool=none;lr=0.01;wd=0;ep=100", "ops"),
    ("v1;ops=gcn;dim=63;act=relu;drop=0.50;skips=;pool=none;lr=0.01;wd=0;ep=100", "dim"),
    ("v1;ops=gcn;dim=64;act=relu;drop=0.5;skips=;pool=none;lr=0.01;wd=0;ep=100", "drop"),
    ("v1;ops=gcn;dim=64;act=relu;drop=0.50;skips=1-0;pool=none;lr=0.01;wd=0;ep=100", "skips"),
    ("v1;ops=gcn;dim=64;act=relu;drop=0.50;skips=;pool=avg;lr=0.01;wd=0;ep=100", "pool"),
    ("v1;ops=gcn;dim=64;act=relu;drop=0.50;skips=;pool=none;lr=0.02;wd=0;ep=100", "lr"),
])
def test_malformed_names_segment(bad, segment):
    with pytest.raises(CodecError) as excinfo:
        parse_genotype(bad)
    assert excinfo.value.segment == segment
    assert "CodecError" in str(excinfo.value)
