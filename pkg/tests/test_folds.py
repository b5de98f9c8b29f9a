import json
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from lesionscreen.folds import FoldError, load_fold_plan, make_stratified_folds, save_fold_plan
from lesionscreen.labels import MULTICLASS_CLASSES
from lesionscreen.manifest import DatasetManifest, ImageRecord, relabel_binary


def synthetic_manifest(per_class: int) -> DatasetManifest:
    records = []
    for name in MULTICLASS_CLASSES:
        for i in range(per_class):
            rid = f"{name.lower()}{i:03d}"
            records.append(ImageRecord(rid, f"{rid}.png", name, "synthetic", ""))
    return DatasetManifest(records=tuple(records))


def label_of(manifest, rid):
    return manifest.by_id()[rid].source_label


def test_mcsi_shape_ten_folds():
    manifest = synthetic_manifest(100)
    plan = make_stratified_folds(manifest, k=10, seed=42)
    for fold in range(10):
        ids = plan.fold_ids(fold)
        assert len(ids) == 40
        per_class = Counter(label_of(manifest, r) for r in ids)
        assert all(per_class[c] == 10 for c in MULTICLASS_CLASSES)


def test_minimal_two_fold_stratification():
    manifest = synthetic_manifest(2)
    plan = make_stratified_folds(manifest, k=2, seed=0)
    for fold in range(2):
        ids = plan.fold_ids(fold)
        assert len(ids) == 4
        assert Counter(label_of(manifest, r) for r in ids) == Counter(
            {c: 1 for c in MULTICLASS_CLASSES}
        )


def test_determinism_byte_identical(tmp_path):
    manifest = synthetic_manifest(20)
    a = make_stratified_folds(manifest, k=10, seed=7)
    b = make_stratified_folds(manifest, k=10, seed=7)
    assert a.assignment == b.assignment
    assert a.dev_split == b.dev_split
    save_fold_plan(a, tmp_path / "a.json")
    save_fold_plan(b, tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_different_seeds_differ():
    manifest = synthetic_manifest(20)
    a = make_stratified_folds(manifest, k=5, seed=1)
    b = make_stratified_folds(manifest, k=5, seed=2)
    assert a.assignment != b.assignment


@settings(max_examples=25, deadline=None)
@given(per_class=st.integers(2, 30), k=st.integers(2, 10), seed=st.integers(0, 2**31 - 1))
def test_partition_and_stratification_properties(per_class, k, seed):
    if per_class < k:
        return
    manifest = synthetic_manifest(per_class)
    plan = make_stratified_folds(manifest, k=k, seed=seed)

    # disjoint + exhaustive
    all_ids = [rid for f in range(k) for rid in plan.fold_ids(f)]
    assert len(all_ids) == len(manifest)
    assert set(all_ids) == {r.id for r in manifest.records}

    lo, hi = per_class // k, -(-per_class // k)
    for fold in range(k):
        per = Counter(label_of(manifest, r) for r in plan.fold_ids(fold))
        for c in MULTICLASS_CLASSES:
            assert lo <= per[c] <= hi
            if per_class % k == 0:
                assert per[c] == per_class // k


@settings(max_examples=20, deadline=None)
@given(per_class=st.integers(4, 30), k=st.integers(2, 8), seed=st.integers(0, 2**31 - 1))
def test_dev_split_75_25(per_class, k, seed):
    if per_class < k:
        return
    manifest = synthetic_manifest(per_class)
    plan = make_stratified_folds(manifest, k=k, seed=seed)
    for fold in range(k):
        train = plan.train_ids(fold)
        val = plan.val_ids(fold)
        dev = set(train) | set(val)
        assert len(train) + len(val) == len(dev) == len(manifest) - len(plan.fold_ids(fold))
        assert dev.isdisjoint(plan.fold_ids(fold))
        # per-class val fraction 25% within one record
        for c in MULTICLASS_CLASSES:
            dev_c = [r for r in dev if label_of(manifest, r) == c]
            val_c = [r for r in val if label_of(manifest, r) == c]
            assert abs(len(val_c) - len(dev_c) / 4.0) <= 1.0


def test_binary_relabel_shares_folds():
    manifest = synthetic_manifest(12)
    plan_multi = make_stratified_folds(manifest, k=4, seed=3)
    plan_binary = make_stratified_folds(relabel_binary(manifest), k=4, seed=3)
    assert plan_multi.assignment == plan_binary.assignment
    # folds remain stratified over the four source classes
    binary = relabel_binary(manifest)
    for fold in range(4):
        per = Counter(binary.by_id()[r].source_label for r in plan_binary.fold_ids(fold))
        assert all(per[c] == 3 for c in MULTICLASS_CLASSES)


def test_errors():
    manifest = synthetic_manifest(5)
    with pytest.raises(FoldError, match="k must be"):
        make_stratified_folds(manifest, k=1, seed=0)
    with pytest.raises(FoldError, match="fewer than k"):
        make_stratified_folds(manifest, k=6, seed=0)


def test_serialization_roundtrip(tmp_path):
    manifest = synthetic_manifest(8)
    plan = make_stratified_folds(manifest, k=4, seed=9)
    path = tmp_path / "plan.json"
    save_fold_plan(plan, path)
    loaded = load_fold_plan(path)
    assert loaded.k == plan.k and loaded.seed == plan.seed
    assert loaded.assignment == plan.assignment
    assert loaded.dev_split == plan.dev_split
    assert loaded.digest() == plan.digest()
    # file is valid structured text with the required fields
    data = json.loads(path.read_text())
    assert data["k"] == 4 and data["seed"] == 9
    any_record = next(iter(data["records"].values()))
    assert set(any_record) == {"fold", "dev_role"}
