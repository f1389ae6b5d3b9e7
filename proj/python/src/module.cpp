#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "sqlstruct/canonical.hpp"
#include "sqlstruct/error.hpp"
#include "sqlstruct/execution.hpp"
#include "sqlstruct/generation.hpp"
#include "sqlstruct/ingest.hpp"
#include "sqlstruct/ir.hpp"
#include "sqlstruct/metrics.hpp"
#include "sqlstruct/report.hpp"
#include "sqlstruct/robustness.hpp"

namespace py = pybind11;
using namespace sqlstruct;

namespace {

// round-trips through the json module; records are small
py::object to_py(const nlohmann::json& j) {
  static auto* loads = new py::object(py::module_::import("json").attr("loads"));
  return (*loads)(j.dump());
}

nlohmann::json from_py(const py::object& o) {
  static auto* dumps = new py::object(py::module_::import("json").attr("dumps"));
  return nlohmann::json::parse((*dumps)(o).cast<std::string>());
}

GenerationSet make_set(std::vector<std::string> candidates, std::string gold_sql, std::string question_id,
                       std::string model) {
  GenerationSet s;
  s.question_id = std::move(question_id);
  s.gold_sql = std::move(gold_sql);
  s.candidates = std::move(candidates);
  s.provenance.model = std::move(model);
  s.provenance.k = s.candidates.size();
  return s;
}

py::dict key_result(const KeyResult& r) {
  py::dict d;
  if (const auto* k = std::get_if<StructureKey>(&r)) {
    d["ok"] = true;
    d["key"] = k->key;
    d["digest"] = k->digest;
  } else {
    const auto& f = std::get<ParseFailure>(r);
    d["ok"] = false;
    d["reason"] = std::string(to_string(f.reason));
    d["message"] = f.message;
  }
  return d;
}

py::object value_to_py(const Value& v) {
  if (std::holds_alternative<std::monostate>(v)) return py::none();
  if (const auto* i = std::get_if<std::int64_t>(&v)) return py::int_(*i);
  if (const auto* d = std::get_if<double>(&v)) return py::float_(*d);
  return py::str(std::get<std::string>(v));
}

}  // namespace

PYBIND11_MODULE(_sqlstruct, m) {
  m.doc() = "Structural consistency metrics for sampled SQL";

  // leaked on purpose: a static py::object would be released after finalization
  static auto* error = new py::exception<Error>(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = *error;
      py::object inst = exc(e.what());
      inst.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error->ptr(), inst.ptr());
    } catch (const IrCompileError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("normalize_text", &normalize_text, py::arg("sql"));
  m.def("key_digest", &key_digest, py::arg("key"));
  m.def(
      "canonicalize", [](const std::string& sql) { return key_result(canonical_key(sql)); }, py::arg("sql"),
      "Canonical structure key of one query as {ok, key, digest} or {ok, reason, message}.");

  m.def(
      "structure_metrics",
      [](std::vector<std::string> candidates, std::string gold_sql, std::string question_id, std::string model) {
        MetricRecord rec;
        {
          py::gil_scoped_release nogil;
          rec = evaluate_structure(make_set(std::move(candidates), std::move(gold_sql), std::move(question_id),
                                            std::move(model)));
        }
        return to_py(nlohmann::json(rec));
      },
      py::arg("candidates"), py::arg("gold_sql"), py::arg("question_id") = "", py::arg("model") = "");

  m.def(
      "family_robustness",
      [](std::vector<std::string> base, std::vector<std::vector<std::string>> variants, std::string gold_sql,
         std::string kind, std::string family_id) {
        VariantFamily f;
        f.family_id = std::move(family_id);
        f.kind = parse_perturbation_kind(kind);
        f.base = make_set(std::move(base), gold_sql, f.family_id, "");
        for (std::size_t i = 0; i < variants.size(); ++i)
          f.variants.push_back(make_set(std::move(variants[i]), gold_sql, f.family_id + "#" + std::to_string(i + 1), ""));
        return to_py(nlohmann::json(evaluate_family(f)));
      },
      py::arg("base"), py::arg("variants"), py::arg("gold_sql") = "", py::arg("kind") = "paraphrase",
      py::arg("family_id") = "family");

  m.def(
      "execute",
      [](const std::string& db, const std::string& sql, long timeout_ms) {
        ExecLimits limits;
        limits.timeout = std::chrono::milliseconds(timeout_ms);
        ExecOutcome out;
        {
          py::gil_scoped_release nogil;
          out = execute_query(db, sql, limits);
        }
        py::dict d;
        d["status"] = std::string(to_string(out.status));
        d["error"] = std::string(to_string(out.error));
        d["message"] = out.message;
        py::list rows;
        if (out.result) {
          for (const auto& row : out.result->rows) {
            py::list r;
            for (const auto& v : row) r.append(value_to_py(v));
            rows.append(py::tuple(r));
          }
        }
        d["rows"] = rows;
        return d;
      },
      py::arg("db"), py::arg("sql"), py::arg("timeout_ms") = 30000);

  m.def(
      "exec_metrics",
      [](const std::string& db, std::vector<std::string> candidates, std::string gold_sql, double acc_threshold,
         double struct_threshold, std::string question_id) {
        Thresholds th{acc_threshold, struct_threshold};
        ExecSummary s;
        {
          py::gil_scoped_release nogil;
          auto report = evaluate_generation_set(make_set(std::move(candidates), std::move(gold_sql),
                                                         std::move(question_id), ""),
                                                db);
          s = summarize_report(report, th);
        }
        return to_py(nlohmann::json(s));
      },
      py::arg("db"), py::arg("candidates"), py::arg("gold_sql"), py::arg("acc_threshold") = 0.8,
      py::arg("struct_threshold") = 0.5, py::arg("question_id") = "");

  m.def(
      "validate_ir",
      [](const std::string& raw) {
        py::dict d;
        auto r = validate_ir(raw);
        if (const auto* ir = std::get_if<QueryIR>(&r)) {
          d["ok"] = true;
          d["ir"] = to_py(nlohmann::json(ir_to_json(*ir)));
        } else {
          const auto& e = std::get<IrError>(r);
          d["ok"] = false;
          d["kind"] = std::string(to_string(e.kind));
          d["path"] = e.path;
          d["message"] = e.message;
        }
        return d;
      },
      py::arg("raw"));

  m.def(
      "compile_ir",
      [](const std::string& raw) {
        auto r = validate_ir(raw);
        if (const auto* e = std::get_if<IrError>(&r)) {
          throw py::value_error(std::string(to_string(e->kind)) + " " + e->path + ": " + e->message);
        }
        return compile_ir(std::get<QueryIR>(r));
      },
      py::arg("raw"), "Validates raw IR JSON text and renders SQLite SQL; raises ValueError when invalid.");

  m.def(
      "pipeline_record",
      [](std::string question_id, std::string raw) {
        return to_py(nlohmann::json(evaluate_pipeline_output(std::move(question_id), std::move(raw))));
      },
      py::arg("question_id"), py::arg("raw"));

  m.def(
      "pipeline_rates",
      [](const py::list& records) {
        std::vector<PipelineRecord> rs;
        for (const auto& r : records) rs.push_back(from_py(py::reinterpret_borrow<py::object>(r)).get<PipelineRecord>());
        return to_py(nlohmann::json(pipeline_metrics(rs)));
      },
      py::arg("records"));

  m.def(
      "prompt_template", [](const std::string& mode) { return prompt_template(parse_generation_mode(mode)).text; },
      py::arg("mode") = "direct");

  m.def(
      "load_spider",
      [](const std::string& dir) {
        auto ds = load_spider(dir);
        py::dict d;
        py::list qs;
        for (const auto& q : ds.questions) {
          py::dict e;
          e["question_id"] = q.question_id;
          e["db_id"] = q.db_id;
          e["question"] = q.question;
          e["gold_sql"] = q.gold_sql;
          qs.append(e);
        }
        d["questions"] = qs;
        d["warnings"] = ds.warnings;
        return d;
      },
      py::arg("dir"));
}
