#!/usr/bin/env python3
"""Smoke test for the groundtree_py extension module.

Builds nothing itself: it loads the cdylib that `cargo build -p groundtree-py`
left in target/, copied next to a temp dir under an importable name. Run from
anywhere inside the repository.
"""

import json
import shutil
import sys
import tempfile
from pathlib import Path


def load_module():
    repo = Path(__file__).resolve().parent.parent
    candidates = [
        repo / "target" / "debug" / "libgroundtree_py.so",
        repo / "target" / "release" / "libgroundtree_py.so",
    ]
    lib = next((p for p in candidates if p.exists()), None)
    if lib is None:
        sys.exit("build the extension first: cargo build -p groundtree-py")
    stage = Path(tempfile.mkdtemp(prefix="groundtree_py_"))
    shutil.copy(lib, stage / "groundtree_py.so")
    sys.path.insert(0, str(stage))
    import groundtree_py

    return groundtree_py


def main():
    gt = load_module()

    # Digraph core round trip.
    g = gt.Digraph(4, [(0, 1), (1, 2), (2, 3), (0, 2)])
    assert g.n == 4 and len(g) == 4
    assert g.has_arc(0, 2) and not g.has_arc(2, 0)
    assert g.out_neighbors(0) == [1, 2]
    assert g.reverse().in_neighbors(0) == [1, 2]
    h = g.delete_vertices([3])
    assert h.vertices() == [0, 1, 2] and (2, 3) not in h.arcs()
    assert gt.Digraph.from_json(g.to_json()).arcs() == g.arcs()

    # Recognition: a sink pair is max-grounded, a 3-cycle is not a tree.
    sink_pair = gt.Digraph(3, [(0, 2), (1, 2)])
    prof = gt.recognize(sink_pair)
    assert prof["oriented_tree"] and prof["grounded"] and prof["max_grounded"]
    assert prof["g"] == [2] and prof["z"] == [0, 1]
    assert prof["heights"] == {0: -1, 1: -1, 2: 0}
    bad = gt.recognize(gt.Digraph(3, [(0, 1), (1, 2), (2, 0)]))
    assert not bad["oriented_tree"] and bad["reason"]

    # Generators feed the validators.
    tree = gt.gen_grounded_tree(6, seed=7, require_max=True)
    assert gt.recognize(tree)["max_grounded"]

    broom = gt.gen_broom(2, 3, ell=2, seed=5)
    revalidated = gt.validate_broom(broom.digraph(), broom.root, broom.k, broom.d)
    assert (revalidated.k, revalidated.d, revalidated.ell) == (2, 3, 2)
    try:
        gt.validate_broom(broom.digraph(), broom.root, broom.k, broom.d + 1)
    except ValueError:
        pass
    else:
        raise AssertionError("wrong degree must be rejected")

    host = gt.from_out_regular(gt.gen_out_regular(30, 4, seed=9), k=2)
    assert (host.k, host.d) == (2, 4) and len(host.roots()) == 30
    cert = host.certificate_json()
    assert sorted(json.loads(cert)["roots"]) == host.roots()
    reloaded = gt.validate_broom_host(host.digraph(), cert, host.k, host.d)
    assert reloaded.roots() == host.roots()
    path = host.source_path(host.roots()[0])
    assert path[-1] == host.roots()[0]

    # Restructuring: extraction and typing.
    fan = gt.Digraph(7, [(0, 1), (0, 2), (0, 3), (1, 4), (1, 5), (1, 6)])
    got = gt.extract_broom(fan, k=2, d=2)
    assert (got.k, got.d) == (1, 1)
    typed = gt.make_typed(gt.gen_broom_digraph(2, 4, n_roots=20, seed=3), t=2)
    assert typed.d == 2 and len(typed.roots()) == 20

    # Subsampling keeps a valid broom digraph.
    big = gt.from_out_regular(gt.gen_out_regular(300, 12, seed=11), k=2)
    sparse = gt.lovasz_trick(big, seed=13)
    assert sparse["host"].k == 2 and sparse["host"].roots()
    assert set(sparse["root_in_degrees"]) == set(sparse["host"].roots())

    # Embedding: exhaustive and randomized agree on a small instance.
    small_host = gt.Digraph(5, [(a, b) for a in range(5) for b in range(5) if a != b])
    found = gt.brute_embed(small_host, sink_pair)
    assert found is not None and len(set(found.values())) == 3
    heur = gt.heuristic_embed(small_host, sink_pair, seed=1)
    assert heur["found"] and heur["map"]
    absent = gt.heuristic_embed(gt.Digraph(3, []), sink_pair)
    assert not absent["found"] and absent["definitive"]

    # The favorable bundle drives the level-by-level embedder.
    fav = gt.favorable_for(sink_pair)
    assert fav["name"] == "sink-pair-flat"
    result = gt.constructive_embed(fav["host"], fav["tree"], fav["schedule_json"])
    assert result["proper"]
    assert result["map"] == {0: 2, 1: 1, 2: 0}
    assert result["cases"] == fav["expect_cases"]
    assert len(gt.favorable_catalog()) == 4

    # Strict mode refuses desk-scale degrees with the theorem bound.
    try:
        gt.constructive_embed(fav["host"], fav["tree"])
    except ValueError as e:
        assert "strict mode" in str(e)
    else:
        raise AssertionError("strict mode must reject a desk-scale host")

    print("smoke test passed")


if __name__ == "__main__":
    main()
