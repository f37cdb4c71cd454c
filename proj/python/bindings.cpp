#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mmrec/mmrec.hpp"

namespace py = pybind11;
using namespace mmrec;

namespace {

std::vector<std::pair<Index, Index>> csr_pairs(const Csr& c) { return c.pairs(); }

Csr csr_from(std::size_t n_rows, std::size_t n_cols, const std::vector<std::pair<Index, Index>>& pairs) {
  for (const auto& [r, c] : pairs)
    if (r >= n_rows || c >= n_cols) throw IndexOutOfRange("pair outside the matrix shape");
  return Csr::from_pairs(n_rows, n_cols, pairs);
}

std::map<std::string, double> report_dict(const MetricReport& r) {
  std::map<std::string, double> out;
  for (const auto& [key, value] : r.values) out[key.str()] = value;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multimodal recommendation core";

  py::register_exception<Error>(m, "MmrecError", PyExc_RuntimeError);

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("n_users", &Dataset::n_users)
      .def_readonly("n_items", &Dataset::n_items)
      .def_property_readonly("user_ids", [](const Dataset& d) { return d.user_map.ids(); })
      .def_property_readonly("item_ids", [](const Dataset& d) { return d.item_map.ids(); })
      .def("pairs", [](const Dataset& d, const std::string& part) { return csr_pairs(d.part(split_part_from_string(part))); },
           py::arg("part"), "Sorted (user, item) index pairs of 'train', 'valid' or 'test'.")
      .def("save", [](const Dataset& d, const std::filesystem::path& dir) { save_dataset(d, dir); });

  m.def(
      "preprocess",
      [](const std::string& interactions, std::uint32_t k, const std::string& strategy,
         std::array<double, 3> ratios, std::uint64_t seed) {
        SplitSpec spec;
        spec.strategy = split_strategy_from_string(strategy);
        spec.ratios = ratios;
        spec.seed = seed;
        return preprocess(read_interactions_file(interactions), {k}, spec);
      },
      py::arg("interactions"), py::arg("k") = 5, py::arg("split") = "per_user_random",
      py::arg("ratios") = std::array<double, 3>{0.8, 0.1, 0.1}, py::arg("seed") = 42,
      "Read, dedupe, k-core filter and split an interaction file.");
  m.def("load_dataset", &load_dataset, py::arg("dir"));

  m.def(
      "k_core",
      [](const std::vector<std::pair<std::string, std::string>>& edges, std::uint32_t k) {
        std::vector<InteractionRecord> records;
        for (const auto& [u, i] : edges) records.push_back({u, i, std::nullopt, std::nullopt});
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& r : k_core_filter(records, {k})) out.emplace_back(r.raw_user_id, r.raw_item_id);
        return out;
      },
      py::arg("edges"), py::arg("k"));

  m.def(
      "read_matrix", [](const std::filesystem::path& p) { return read_matrix_file(p); }, py::arg("path"));
  m.def(
      "write_matrix",
      [](const std::filesystem::path& p, const Matrix& values, bool single) {
        write_matrix_file(p, values, single ? MatrixPrecision::f32 : MatrixPrecision::f64);
      },
      py::arg("path"), py::arg("values"), py::arg("single") = true);

  m.def(
      "top_k", [](std::vector<double> scores, std::size_t k) { return top_k(scores, k); }, py::arg("scores"),
      py::arg("k"));
  m.def(
      "recall_at_k", [](std::vector<Index> t, std::vector<Index> g, std::size_t k) { return recall_at_k(t, g, k); },
      py::arg("topk"), py::arg("ground_truth"), py::arg("k"));
  m.def(
      "precision_at_k",
      [](std::vector<Index> t, std::vector<Index> g, std::size_t k) { return precision_at_k(t, g, k); },
      py::arg("topk"), py::arg("ground_truth"), py::arg("k"));
  m.def(
      "ndcg_at_k", [](std::vector<Index> t, std::vector<Index> g, std::size_t k) { return ndcg_at_k(t, g, k); },
      py::arg("topk"), py::arg("ground_truth"), py::arg("k"));
  m.def(
      "map_at_k", [](std::vector<Index> t, std::vector<Index> g, std::size_t k) { return map_at_k(t, g, k); },
      py::arg("topk"), py::arg("ground_truth"), py::arg("k"));

  py::class_<ModelState>(m, "ModelState")
      .def_property_readonly("kind", [](const ModelState& s) { return std::string(to_string(s.kind)); })
      .def_readonly("n_users", &ModelState::n_users)
      .def_readonly("n_items", &ModelState::n_items)
      .def_property_readonly("tensor_names",
                             [](const ModelState& s) {
                               std::vector<std::string> names;
                               for (const auto& [name, t] : s.tensors) names.push_back(name);
                               return names;
                             })
      .def(
          "tensor", [](const ModelState& s, const std::string& name) { return s.tensor(name); }, py::arg("name"))
      .def(
          "set_tensor",
          [](ModelState& s, const std::string& name, const Matrix& value) {
            Matrix& t = s.tensor(name);
            if (t.rows() != value.rows() || t.cols() != value.cols()) throw DimensionMismatch("tensor shape differs");
            t = value;
          },
          py::arg("name"), py::arg("value"))
      .def("save", [](const ModelState& s, const std::filesystem::path& dir) { save_checkpoint(s, dir); });

  m.def(
      "init_params",
      [](const std::string& kind, std::size_t n_users, std::size_t n_items, std::size_t d_fused, std::size_t d,
         std::size_t d_p, std::size_t n_layers, double lambda_reg, std::uint64_t seed) {
        ModelDims dims{d, d_p, n_layers, lambda_reg};
        return init_params(model_kind_from_string(kind), dims, n_users, n_items, d_fused, seed);
      },
      py::arg("kind"), py::arg("n_users"), py::arg("n_items"), py::arg("d_fused") = 0, py::arg("d") = 64,
      py::arg("d_p") = 64, py::arg("n_layers") = 2, py::arg("lambda_reg") = 1e-4, py::arg("seed") = 42);
  m.def("load_checkpoint", &load_checkpoint, py::arg("dir"));

  m.def(
      "score_all",
      [](const ModelState& s, std::size_t n_users, std::size_t n_items,
         const std::vector<std::pair<Index, Index>>& train, std::optional<Matrix> fused) {
        const Csr c = csr_from(n_users, n_items, train);
        return score_all(s, ModelContext(c, fused ? &*fused : nullptr));
      },
      py::arg("state"), py::arg("n_users"), py::arg("n_items"), py::arg("train"), py::arg("fused") = py::none(),
      "Dense user x item scores.");
  m.def(
      "calculate_loss",
      [](const ModelState& s, const std::vector<std::tuple<Index, Index, Index>>& triples,
         const std::vector<std::pair<Index, Index>>& train, std::optional<Matrix> fused) {
        TripleBatch batch;
        for (const auto& [u, i, j] : triples) batch.triples.push_back({u, i, j});
        const Csr c = csr_from(s.n_users, s.n_items, train);
        const auto result = calculate_loss(s, batch, ModelContext(c, fused ? &*fused : nullptr));
        return py::make_tuple(result.loss, result.grads.tensors);
      },
      py::arg("state"), py::arg("triples"), py::arg("train"), py::arg("fused") = py::none(),
      "BPR loss and gradients as (loss, {tensor: gradient}).");

  m.def(
      "evaluate",
      [](const ModelState& s, const Dataset& d, const std::string& part, std::vector<std::size_t> cutoffs,
         std::optional<Matrix> fused) {
        const ModelContext ctx(d.train, fused ? &*fused : nullptr);
        return report_dict(evaluate(s, ctx, d, split_part_from_string(part), std::move(cutoffs)));
      },
      py::arg("state"), py::arg("dataset"), py::arg("part") = "test",
      py::arg("cutoffs") = std::vector<std::size_t>{5, 10, 20, 50}, py::arg("fused") = py::none());

  m.def(
      "run_grid",
      [](const std::filesystem::path& config, const std::filesystem::path& out, std::size_t jobs) {
        SummaryReport report;
        {
          py::gil_scoped_release release;
          report = run_experiment(parse_config(config), {out, jobs});
        }
        py::list runs;
        for (const auto& r : report.runs) {
          py::dict row;
          row["combo"] = r.combo;
          row["ok"] = r.ok();
          row["error"] = r.error;
          row["best_epoch"] = r.best_epoch;
          row["valid"] = r.valid ? py::cast(report_dict(*r.valid)) : py::none();
          row["test"] = r.test ? py::cast(report_dict(*r.test)) : py::none();
          runs.append(row);
        }
        py::dict out_dict;
        out_dict["runs"] = runs;
        out_dict["best"] = report.best_index ? py::cast(*report.best_index) : py::none();
        out_dict["summary"] = format_report(report);
        return out_dict;
      },
      py::arg("config"), py::arg("out") = std::filesystem::path{}, py::arg("jobs") = 1,
      "Run every combination of a config's grid.");
  m.def(
      "grid_size", [](const std::filesystem::path& config) { return expand_grid(parse_config(config)).size(); },
      py::arg("config"));
}
