import csv
import json

import pytest

from fairway.errors import DomainError, ParseError, SchemaVersionError
from fairway.fundamental_diagram import (
    CharacteristicParams,
    FdModel,
    derive_characteristics,
    speed_at_density,
)
from fairway.io_store import (
    ModelDocument,
    document_from_dict,
    document_to_dict,
    emit_curve_samples,
    load_model,
    load_surveillance,
    load_tracks,
    load_vessel_meta,
    meta_map,
    save_model,
    serialize_document,
)
from fairway.regression import FitReport
from fairway.traffic_state import StateBands
from fairway.trajectory import fleet_flow_samples

from reference_data import STATE_BOUNDARIES, V_MIN

META_HEADER = "run_id,fleet_position,length_m,locator_offset_m,load_state\n"
TRACK_HEADER = "run_id,fleet_position,t_seconds,x_m,y_m\n"
SURV_HEADER = (
    "interval_start,direction,flow_vph,mean_speed_kmh,loaded_count,empty_count\n"
)


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadVesselMeta:
    def test_happy_path(self, tmp_path):
        path = write(tmp_path, "meta.csv", META_HEADER + (
            "run_a,1,85.0,12.0,loaded\n"
            "run_a,2,90.0,10.0,empty\n"
        ))
        result = load_vessel_meta(path)
        assert result.rejects == ()
        mapping = meta_map(result)
        assert set(mapping) == {("run_a", 1), ("run_a", 2)}
        assert mapping[("run_a", 1)].length == 85.0
        assert mapping[("run_a", 2)].load_state == "empty"

    def test_missing_column(self, tmp_path):
        path = write(tmp_path, "meta.csv",
                     "run_id,fleet_position,length_m,load_state\n")
        with pytest.raises(ParseError, match="locator_offset_m"):
            load_vessel_meta(path)

    def test_empty_file(self, tmp_path):
        path = write(tmp_path, "meta.csv", "")
        with pytest.raises(ParseError, match="header"):
            load_vessel_meta(path)

    def test_strict_raise_names_file_line_column(self, tmp_path):
        path = write(tmp_path, "meta.csv", META_HEADER + (
            "run_a,1,85.0,12.0,loaded\n"
            "run_a,2,not_a_number,10.0,empty\n"
        ))
        with pytest.raises(ParseError, match=r"meta\.csv:3:length_m"):
            load_vessel_meta(path)

    def test_lenient_collects_rejects_with_line_numbers(self, tmp_path):
        path = write(tmp_path, "meta.csv", META_HEADER + (
            "run_a,1,85.0,12.0,loaded\n"
            "run_a,2,,10.0,empty\n"
            "run_a,3,90.0,10.0,ballast\n"
            "run_a,4,90.0,10.0,empty\n"
        ))
        result = load_vessel_meta(path, strict=False)
        assert len(result.items) == 2
        assert [r.line for r in result.rejects] == [3, 4]
        assert result.rejects[0].column == "length_m"
        assert "missing value" in result.rejects[0].message

    def test_duplicate_key_rejected(self, tmp_path):
        path = write(tmp_path, "meta.csv", META_HEADER + (
            "run_a,1,85.0,12.0,loaded\n"
            "run_a,1,90.0,10.0,empty\n"
        ))
        with pytest.raises(ParseError, match="duplicate"):
            load_vessel_meta(path)

    def test_negative_length_rejected(self, tmp_path):
        path = write(tmp_path, "meta.csv", META_HEADER + "run_a,1,-5.0,12.0,loaded\n")
        result = load_vessel_meta(path, strict=False)
        assert result.items == ()
        assert len(result.rejects) == 1
        assert "positive" in result.rejects[0].message


class TestLoadTracks:
    def fixture_paths(self, tmp_path):
        meta_path = write(tmp_path, "meta.csv", META_HEADER + (
            "run_a,1,85.0,12.0,loaded\n"
            "run_a,2,90.0,10.0,loaded\n"
        ))
        rows = []
        for t in range(4):
            rows.append(f"run_a,1,{t},{200.0 + 3.0 * t},0.0\n")
            rows.append(f"run_a,2,{t},{50.0 + 3.0 * t},0.0\n")
        track_path = write(tmp_path, "tracks.csv", TRACK_HEADER + "".join(rows))
        return track_path, meta_path

    def test_assembles_sorted_runs(self, tmp_path):
        track_path, meta_path = self.fixture_paths(tmp_path)
        mapping = meta_map(load_vessel_meta(meta_path))
        runs, result = load_tracks(track_path, mapping)
        assert result.rejects == ()
        assert len(runs) == 1
        run = runs[0]
        assert run.run_id == "run_a"
        assert [tr.meta.fleet_position for tr in run.tracks] == [1, 2]
        assert [f.t for f in run.tracks[0].fixes] == [0, 1, 2, 3]
        # steady 3 m/s convoy: usable downstream of the loaders
        samples = fleet_flow_samples(run)
        assert len(samples) == 3
        assert samples[0].mean_speed == pytest.approx(10.8)

    def test_missing_metadata_errors(self, tmp_path):
        track_path, meta_path = self.fixture_paths(tmp_path)
        mapping = meta_map(load_vessel_meta(meta_path))
        del mapping[("run_a", 2)]
        with pytest.raises(ParseError, match="position 2"):
            load_tracks(track_path, mapping)

    def test_duplicate_timestamp_rejected(self, tmp_path):
        meta_path = write(tmp_path, "meta.csv",
                          META_HEADER + "run_a,1,85.0,12.0,loaded\n")
        track_path = write(tmp_path, "tracks.csv", TRACK_HEADER + (
            "run_a,1,0,0.0,0.0\n"
            "run_a,1,0,1.0,0.0\n"
        ))
        with pytest.raises(ParseError, match=r"tracks\.csv:3:t_seconds"):
            load_tracks(track_path, meta_map(load_vessel_meta(meta_path)))

    def test_unparseable_coordinate_lenient(self, tmp_path):
        meta_path = write(tmp_path, "meta.csv",
                          META_HEADER + "run_a,1,85.0,12.0,loaded\n")
        track_path = write(tmp_path, "tracks.csv", TRACK_HEADER + (
            "run_a,1,0,0.0,0.0\n"
            "run_a,1,1,oops,0.0\n"
            "run_a,1,2,6.0,0.0\n"
        ))
        runs, result = load_tracks(
            track_path, meta_map(load_vessel_meta(meta_path)), strict=False
        )
        assert [r.line for r in result.rejects] == [3]
        assert [f.t for f in runs[0].tracks[0].fixes] == [0, 2]


class TestLoadSurveillance:
    def test_happy_path(self, tmp_path):
        path = write(tmp_path, "surv.csv", SURV_HEADER + (
            "2021-06-01T08:00:00,upstream,42,6.0,5,2\n"
            "2021-06-01T08:05:00,downstream,0,0.0,0,0\n"
        ))
        result = load_surveillance(path)
        assert result.rejects == ()
        assert result.items[0].flow_vph == 42.0
        assert result.items[0].loaded_count == 5
        assert result.items[1].mean_speed_kmh == 0.0

    def test_validation_rejects(self, tmp_path):
        path = write(tmp_path, "surv.csv", SURV_HEADER + (
            "not-a-time,upstream,42,6.0,5,2\n"
            "2021-06-01T08:00:00,sideways,42,6.0,5,2\n"
            "2021-06-01T08:05:00,upstream,-1,6.0,5,2\n"
            "2021-06-01T08:10:00,upstream,42,0.0,5,2\n"
        ))
        result = load_surveillance(path, strict=False)
        assert result.items == ()
        assert [r.column for r in result.rejects] == [
            "interval_start", "direction", "flow_vph", "mean_speed_kmh",
        ]


def make_document():
    model = FdModel(form="greenshields", c1=0.7634, c2=11.817)
    characteristics = derive_characteristics(model, V_MIN)
    fit = FitReport(family="linear", a=-0.7634, b=11.817,
                    r_squared=0.92, n_points=40, fit_space="original")
    return ModelDocument(
        fd=model,
        v_min=V_MIN,
        characteristics=characteristics,
        bands=StateBands(boundaries=STATE_BOUNDARIES),
        fit=fit,
        created_utc="2021-06-01T00:00:00+00:00",
    )


class TestModelDocument:
    def test_requires_model_or_bands(self):
        with pytest.raises(DomainError):
            ModelDocument()
        ModelDocument(bands=StateBands(boundaries=STATE_BOUNDARIES))
        ModelDocument(fd=FdModel(form="underwood", c1=13.0, c2=0.107))

    def test_dict_round_trip_identity(self):
        doc = make_document()
        assert document_from_dict(document_to_dict(doc)) == doc

    def test_save_load_round_trip(self, tmp_path):
        doc = make_document()
        path = tmp_path / "model.json"
        save_model(doc, path)
        assert load_model(path) == doc

    def test_serialization_is_byte_deterministic(self, tmp_path):
        doc = make_document()
        first = serialize_document(doc)
        second = serialize_document(load_model_roundtrip(tmp_path, doc))
        assert first == second

    def test_full_float_precision_preserved(self, tmp_path):
        doc = make_document()
        path = tmp_path / "model.json"
        save_model(doc, path)
        loaded = load_model(path)
        assert loaded.characteristics.k_max == doc.characteristics.k_max
        assert loaded.fd.c1 == doc.fd.c1

    def test_schema_version_mismatch(self, tmp_path):
        doc = make_document()
        raw = document_to_dict(doc)
        raw["schema_version"] = 99
        path = write(tmp_path, "model.json", json.dumps(raw))
        with pytest.raises(SchemaVersionError, match="99"):
            load_model(path)

    def test_malformed_json(self, tmp_path):
        path = write(tmp_path, "model.json", "{not json")
        with pytest.raises(ParseError):
            load_model(path)

    def test_non_object_document(self, tmp_path):
        path = write(tmp_path, "model.json", '[1, 2, 3]')
        with pytest.raises(ParseError):
            load_model(path)

    def test_invalid_coefficients_rejected_on_load(self, tmp_path):
        raw = document_to_dict(make_document())
        raw["model"]["c2"] = -11.817
        path = write(tmp_path, "model.json", json.dumps(raw))
        with pytest.raises(DomainError, match="positive"):
            load_model(path)

    def test_inconsistent_characteristics_rejected(self):
        with pytest.raises(DomainError, match="q_m"):
            CharacteristicParams(v_f=11.8, v_m=5.9, k_m=7.7, q_m=99.0,
                                 k_max=12.0, v_min=V_MIN)


def load_model_roundtrip(tmp_path, doc):
    path = tmp_path / "roundtrip.json"
    save_model(doc, path)
    return load_model(path)


class TestEmitCurveSamples:
    MODEL = FdModel(form="piecewise_linear", c1=0.667, c2=10.92, v_f=10.5, k1=4.0)

    def test_grid_rows_and_invariant(self, tmp_path):
        path = tmp_path / "curve.csv"
        n = emit_curve_samples(self.MODEL, (0.5, 12.0), 0.5, path)
        assert n == 24
        with open(path, newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert len(rows) == 24
        ks = [float(r["k"]) for r in rows]
        assert ks[0] == 0.5 and ks[-1] == 12.0
        for row in rows:
            k, v, q = (float(row[c]) for c in ("k", "v", "q"))
            assert v == pytest.approx(speed_at_density(self.MODEL, k), rel=1e-12)
            assert q == pytest.approx(k * v, rel=1e-12)

    def test_plateau_value_on_grid(self, tmp_path):
        path = tmp_path / "curve.csv"
        emit_curve_samples(self.MODEL, (0.5, 12.0), 0.5, path)
        with open(path, newline="") as handle:
            by_k = {float(r["k"]): float(r["v"]) for r in csv.DictReader(handle)}
        assert by_k[4.0] == 10.5  # breakpoint is still free-flow
        assert by_k[4.5] == pytest.approx(-0.667 * 4.5 + 10.92)

    def test_bad_arguments(self, tmp_path):
        path = tmp_path / "curve.csv"
        with pytest.raises(DomainError):
            emit_curve_samples(self.MODEL, (0.5, 12.0), 0.0, path)
        with pytest.raises(DomainError):
            emit_curve_samples(self.MODEL, (12.0, 0.5), 0.5, path)

    def test_single_point_range(self, tmp_path):
        path = tmp_path / "curve.csv"
        assert emit_curve_samples(self.MODEL, (2.0, 2.0), 0.5, path) == 1
