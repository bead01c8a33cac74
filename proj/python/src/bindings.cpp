#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>

#include "depara/error.hpp"
#include "depara/evaluation.hpp"
#include "depara/graph.hpp"
#include "depara/rank_stats.hpp"
#include "depara/refnet.hpp"
#include "depara/similarity.hpp"
#include "depara/synthbench.hpp"
#include "depara/tensor_store.hpp"
#include "depara/transferability.hpp"

namespace py = pybind11;
using namespace depara;

namespace {

template <typename T>
using CArray = py::array_t<T, py::array::c_style | py::array::forcecast>;

template <typename T>
Matrix<T> to_matrix(const CArray<T>& a) {
    if (a.ndim() != 2) throw ValidationError("expected a 2-D array");
    const auto* p = a.data();
    return Matrix<T>(a.shape(0), a.shape(1), std::vector<T>(p, p + a.size()));
}

template <typename T>
py::array_t<T> to_array(const Matrix<T>& m) {
    py::array_t<T> out({m.rows(), m.cols()});
    std::copy(m.flat().begin(), m.flat().end(), out.mutable_data());
    return out;
}

std::vector<double> to_vector(const CArray<double>& a) {
    if (a.ndim() != 1) throw ValidationError("expected a 1-D array");
    return {a.data(), a.data() + a.size()};
}

py::array_t<double> vector_array(const std::vector<double>& v) {
    py::array_t<double> out(v.size());
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

NodeTerm node_term(bool edges_only) { return edges_only ? NodeTerm::omit : NodeTerm::required; }

KnowledgePool make_pool(const std::vector<std::pair<std::string, DeparaGraph>>& items) {
    KnowledgePool pool;
    for (const auto& [id, graph] : items) pool.items.push_back({id, graph});
    return pool;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Probe-graph transferability toolkit";

    static py::exception<Error> base_error(m, "Error", PyExc_RuntimeError);
    static py::exception<ValidationError> validation_error(m, "ValidationError", PyExc_ValueError);
    static py::exception<FormatError> format_error(m, "FormatError", PyExc_ValueError);
    static py::exception<IoError> io_error(m, "IoError", PyExc_OSError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ValidationError& e) {
            py::set_error(validation_error, e.what());
        } catch (const FormatError& e) {
            py::set_error(format_error, e.what());
        } catch (const IoError& e) {
            py::set_error(io_error, e.what());
        } catch (const Error& e) {
            py::set_error(base_error, e.what());
        }
    });

    py::enum_<Activation>(m, "Activation")
        .value("identity", Activation::identity)
        .value("relu", Activation::relu)
        .value("tanh", Activation::tanh);

    py::class_<ProbeBundle>(m, "ProbeBundle")
        .def(py::init([](std::string model_id, std::string layer_id, std::string probe_id,
                         const CArray<float>& embeddings, const CArray<float>& attributions) {
                 ProbeBundle b{std::move(model_id), std::move(layer_id), std::move(probe_id), to_matrix(embeddings),
                               to_matrix(attributions)};
                 validate_bundle(b);
                 return b;
             }),
             py::arg("model_id"), py::arg("layer_id"), py::arg("probe_id"), py::arg("embeddings"),
             py::arg("attributions"))
        .def_readonly("model_id", &ProbeBundle::model_id)
        .def_readonly("layer_id", &ProbeBundle::layer_id)
        .def_readonly("probe_id", &ProbeBundle::probe_id)
        .def_property_readonly("embeddings", [](const ProbeBundle& b) { return to_array(b.embeddings); })
        .def_property_readonly("attributions", [](const ProbeBundle& b) { return to_array(b.attributions); })
        .def_property_readonly("n", &ProbeBundle::n)
        .def("encode", [](const ProbeBundle& b) {
            const auto bytes = encode_bundle(b);
            return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
        });
    m.def("decode_bundle", [](const py::bytes& data) {
        const std::string_view s = data;
        return decode_bundle({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
    });
    m.def("load_bundle", &load_bundle, py::arg("path"));
    m.def("save_bundle", &save_bundle, py::arg("bundle"), py::arg("path"));

    py::class_<RefNet>(m, "RefNet")
        .def(py::init([](const std::vector<std::tuple<CArray<float>, CArray<float>, Activation>>& layer_specs) {
                 std::vector<DenseLayer> layers;
                 for (const auto& [w, b, act] : layer_specs) {
                     if (b.ndim() != 1) throw ValidationError("bias must be 1-D");
                     layers.push_back({to_matrix(w), std::vector<float>(b.data(), b.data() + b.size()), act});
                 }
                 return RefNet(std::move(layers));
             }),
             py::arg("layers"), "layers: list of (weights d_out x d_in, bias d_out, activation)")
        .def_property_readonly("depth", &RefNet::depth)
        .def_property_readonly("input_dim", &RefNet::input_dim)
        .def_property_readonly("output_dim", &RefNet::output_dim)
        .def("__eq__", [](const RefNet& a, const RefNet& b) { return a == b; });
    m.def("load_refnet", &load_refnet, py::arg("path"));
    m.def("save_refnet", &save_refnet, py::arg("net"), py::arg("path"));

    m.def("forward", [](const RefNet& net, const CArray<double>& x, std::size_t tap) {
        return vector_array(forward(net, to_vector(x), LayerTap{tap}));
    }, py::arg("net"), py::arg("x"), py::arg("tap"));
    m.def("grad_sq_norm", [](const RefNet& net, const CArray<double>& x, std::size_t tap) {
        return vector_array(grad_sq_norm(net, to_vector(x), LayerTap{tap}));
    }, py::arg("net"), py::arg("x"), py::arg("tap"));
    m.def("attribution", [](const RefNet& net, const CArray<double>& x, std::size_t tap) {
        return vector_array(attribution(net, to_vector(x), LayerTap{tap}));
    }, py::arg("net"), py::arg("x"), py::arg("tap"));
    m.def("export_bundle",
          [](const RefNet& net, const CArray<double>& probe, std::size_t tap, std::string model_id,
             std::string layer_id, std::string probe_id) {
              return export_bundle(net, to_matrix(probe), LayerTap{tap},
                                   {std::move(model_id), std::move(layer_id), std::move(probe_id)});
          },
          py::arg("net"), py::arg("probe"), py::arg("tap"), py::arg("model_id"), py::arg("layer_id"),
          py::arg("probe_id"));

    py::class_<DeparaGraph>(m, "Graph")
        .def_readonly("model_id", &DeparaGraph::model_id)
        .def_readonly("layer_id", &DeparaGraph::layer_id)
        .def_readonly("probe_id", &DeparaGraph::probe_id)
        .def_property_readonly("nodes", [](const DeparaGraph& g) { return to_array(g.nodes); })
        .def_property_readonly("edges", [](const DeparaGraph& g) { return vector_array(g.edges); });
    m.def("build_graph", &build_graph, py::arg("bundle"));

    py::class_<SimilarityReport>(m, "SimilarityReport")
        .def_readonly("s_nodes", &SimilarityReport::s_nodes)
        .def_readonly("s_edges", &SimilarityReport::s_edges)
        .def_readonly("lambda_", &SimilarityReport::lambda)
        .def_readonly("score", &SimilarityReport::score);
    m.def("graph_similarity",
          [](const DeparaGraph& a, const DeparaGraph& b, double lambda, bool edges_only) {
              return graph_similarity(a, b, lambda, node_term(edges_only));
          },
          py::arg("a"), py::arg("b"), py::arg("lambda_") = 1.0, py::arg("edges_only") = false);
    m.def("spearman", [](const CArray<double>& a, const CArray<double>& b) {
        return spearman(to_vector(a), to_vector(b));
    });

    py::class_<RankingEntry>(m, "RankingEntry")
        .def_readonly("candidate_id", &RankingEntry::candidate_id)
        .def_readonly("score", &RankingEntry::score)
        .def_readonly("rank", &RankingEntry::rank)
        .def_readonly("tied", &RankingEntry::tied);
    py::class_<RankingTable>(m, "RankingTable")
        .def_readonly("target_id", &RankingTable::target_id)
        .def_readonly("entries", &RankingTable::entries)
        .def("to_json", [](const RankingTable& t) { return to_json(t).dump(); })
        .def("to_csv", [](const RankingTable& t) { return to_csv(t); });
    py::class_<LayerSelection>(m, "LayerSelection")
        .def_readonly("candidate_id", &LayerSelection::candidate_id)
        .def_readonly("score", &LayerSelection::score)
        .def_readonly("tie", &LayerSelection::tie)
        .def_readonly("ranking", &LayerSelection::ranking);

    m.def("rank_by_similarity",
          [](const std::vector<std::pair<std::string, DeparaGraph>>& pool, const DeparaGraph& target, double lambda,
             bool edges_only) { return rank_by_similarity(make_pool(pool), target, lambda, node_term(edges_only)); },
          py::arg("pool"), py::arg("target"), py::arg("lambda_") = 1.0, py::arg("edges_only") = false);
    m.def("rank_by_risk", &rank_by_risk, py::arg("risks"), py::arg("target_id") = std::string{});
    m.def("select_layer",
          [](const std::vector<std::pair<std::string, DeparaGraph>>& layers, const DeparaGraph& target,
             double lambda, bool edges_only) {
              return select_layer(make_pool(layers), target, lambda, node_term(edges_only));
          },
          py::arg("layers"), py::arg("target"), py::arg("lambda_") = 1.0, py::arg("edges_only") = false);
    m.def("all_pairs_matrix",
          [](const std::vector<std::pair<std::string, DeparaGraph>>& pool, double lambda, bool edges_only) {
              return to_array(all_pairs_matrix(make_pool(pool), lambda, node_term(edges_only)));
          },
          py::arg("pool"), py::arg("lambda_") = 1.0, py::arg("edges_only") = false);

    m.def("precision_at_k",
          [](const RankingTable& t, std::set<std::string> relevant, std::size_t k) {
              return precision_at_k(t, {t.target_id, std::move(relevant)}, k);
          },
          py::arg("ranking"), py::arg("relevant"), py::arg("k"));
    m.def("recall_at_k",
          [](const RankingTable& t, std::set<std::string> relevant, std::size_t k) {
              return recall_at_k(t, {t.target_id, std::move(relevant)}, k);
          },
          py::arg("ranking"), py::arg("relevant"), py::arg("k"));
    m.def("task_tree_newick",
          [](const CArray<double>& scores, const std::vector<std::string>& ids, double lambda) {
              return to_newick(task_tree(to_matrix(scores), ids, lambda));
          },
          py::arg("scores"), py::arg("ids"), py::arg("lambda_") = 1.0);

    py::class_<SynthFamily>(m, "SynthFamily")
        .def_readonly("seed", &SynthFamily::seed)
        .def_readonly("base_net", &SynthFamily::base_net)
        .def_property_readonly("probe", [](const SynthFamily& f) { return to_array(f.probe); })
        .def_property_readonly("variant_nets", [](const SynthFamily& f) {
            std::vector<std::pair<double, RefNet>> out;
            for (const auto& v : f.variants) out.emplace_back(v.noise_sigma, v.net);
            return out;
        });
    m.def("generate_family",
          [](std::uint64_t seed, std::size_t d_input, std::size_t d_embed, std::size_t n_probe,
             const std::vector<double>& sigmas) { return generate_family(seed, d_input, d_embed, n_probe, sigmas); },
          py::arg("seed"), py::arg("d_input") = 32, py::arg("d_embed") = 8, py::arg("n_probe") = 64,
          py::arg("sigmas") = std::vector<double>{0.0, 0.05, 0.2, 1.0});
    m.def("median_sweep",
          [](const std::vector<std::uint64_t>& seeds, std::size_t d_input, std::size_t d_embed, std::size_t n_probe,
             const std::vector<double>& sigmas, double lambda) {
              std::vector<std::pair<double, double>> out;
              for (const auto& s : median_sweep(seeds, d_input, d_embed, n_probe, sigmas, lambda)) {
                  out.emplace_back(s.sigma, s.score);
              }
              return out;
          },
          py::arg("seeds"), py::arg("d_input") = 32, py::arg("d_embed") = 8, py::arg("n_probe") = 64,
          py::arg("sigmas") = std::vector<double>{0.0, 0.05, 0.2, 1.0}, py::arg("lambda_") = 1.0);
}
