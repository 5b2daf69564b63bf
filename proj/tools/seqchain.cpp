// seqchain: approximate an observed symbol sequence by a piecewise
// homogeneous Markov chain, optionally under polyhedral transition
// constraints, and verify the approximation by exact linear algebra
// and seeded simulation.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <seqchain/approximator.hpp>
#include <seqchain/chain_analysis.hpp>
#include <seqchain/constrained.hpp>
#include <seqchain/partition.hpp>
#include <seqchain/polyhedron.hpp>
#include <seqchain/sequence_stats.hpp>
#include <seqchain/simulator.hpp>

namespace {

using json = nlohmann::ordered_json;
using namespace seqchain;

// infinities are not representable in JSON numbers
json jnum(double x) {
    if (x == kInf) return "inf";
    if (x == -kInf) return "-inf";
    return x;
}

json jmatrix(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols; ++j) row.push_back(jnum(m(i, j)));
        rows.push_back(row);
    }
    return rows;
}

json jmatrix(const TransitionMatrix& m) { return jmatrix(m.m); }

json jvector(const std::vector<double>& v) {
    json out = json::array();
    for (double x : v) out.push_back(jnum(x));
    return out;
}

std::string scalar_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_float()) return fmt17(v.get<double>());
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
    if (v.is_null()) return "-";
    return v.dump();
}

void render_text(std::ostream& out, const json& node, int indent) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    for (const auto& [key, value] : node.items()) {
        if (value.is_primitive()) {
            out << pad << key << ": " << scalar_text(value) << '\n';
        } else if (value.is_array()) {
            bool all_scalar = true, all_object = !value.empty(), all_array = !value.empty();
            for (const auto& e : value) {
                all_scalar = all_scalar && e.is_primitive();
                all_object = all_object && e.is_object();
                all_array = all_array && e.is_array();
            }
            if (value.empty() || all_scalar) {
                out << pad << key << ":";
                for (const auto& e : value) out << ' ' << scalar_text(e);
                out << '\n';
            } else if (all_array) {  // numeric matrix
                out << pad << key << ":\n";
                for (const auto& row : value) {
                    out << pad << "  ";
                    for (std::size_t j = 0; j < row.size(); ++j) {
                        if (j) out << ' ';
                        out << scalar_text(row[j]);
                    }
                    out << '\n';
                }
            } else if (all_object) {  // table keyed by the first row
                std::vector<std::string> cols;
                for (const auto& [ck, cv] : value[0].items()) {
                    (void)cv;
                    cols.push_back(ck);
                }
                out << pad << key << ":\n" << pad << "  #";
                for (const auto& c : cols) out << ' ' << c;
                out << '\n';
                for (const auto& row : value) {
                    out << pad << "  ";
                    for (std::size_t c = 0; c < cols.size(); ++c) {
                        if (c) out << ' ';
                        if (row.contains(cols[c])) {
                            const auto& cell = row[cols[c]];
                            out << (cell.is_primitive() ? scalar_text(cell) : cell.dump());
                        } else {
                            out << '-';
                        }
                    }
                    out << '\n';
                }
            } else {
                out << pad << key << ": " << value.dump() << '\n';
            }
        } else {  // object
            out << pad << key << ":\n";
            render_text(out, value, indent + 1);
        }
    }
}

struct OutputOptions {
    std::string text_path;
    std::string json_path;
};

void add_output_options(CLI::App* cmd, OutputOptions& opts) {
    cmd->add_option("--output", opts.text_path, "also write the text report to this file");
    cmd->add_option("--json", opts.json_path, "write a machine-readable JSON report");
}

void emit_report(const json& report, const OutputOptions& opts) {
    render_text(std::cout, report, 0);
    if (!opts.text_path.empty()) {
        std::ofstream f(opts.text_path);
        if (!f) throw ParseError("cannot write " + opts.text_path);
        render_text(f, report, 0);
    }
    if (!opts.json_path.empty()) {
        std::ofstream f(opts.json_path);
        if (!f) throw ParseError("cannot write " + opts.json_path);
        f << report.dump(2) << '\n';
    }
}

// matrix files may carry an optional '#alphabet: ...' header line
std::pair<TransitionMatrix, Alphabet> read_kernel_with_alphabet(const std::string& path) {
    std::ifstream probe(path);
    if (!probe) throw ParseError("cannot open " + path);
    std::string first;
    std::getline(probe, first);
    std::vector<std::string> symbols;
    const std::string key = "#alphabet:";
    if (first.rfind(key, 0) == 0) {
        std::istringstream ls(first.substr(key.size()));
        std::string tok;
        while (ls >> tok) symbols.push_back(tok);
    }
    auto kernel = read_kernel_file(path);
    if (symbols.empty())
        for (std::size_t s = 0; s < kernel.size(); ++s)
            symbols.push_back(std::to_string(s));
    if (symbols.size() != kernel.size())
        throw ParseError("alphabet header does not match the matrix size");
    return {kernel, Alphabet(symbols)};
}

json constants_json(const BasicConstants& c) {
    json out;
    out["epsilon"] = jnum(c.epsilon);
    out["delta"] = jnum(c.delta);
    out["zeta"] = jnum(c.zeta);
    out["N"] = c.N;
    out["split_threshold"] = jnum(c.a);
    out["range_ok"] = c.range_ok;
    out["checks"] = {{"N1", c.n1}, {"N2", c.n2}, {"N3", c.n3},
                     {"N4", c.n4}, {"N5", c.n5}, {"N6", c.n6}};
    out["all_pass"] = c.all();
    out["minimal_N0"] = c.minimal_N0;
    out["minimal_N0_astronomical"] = c.astronomical;
    return out;
}

json constants_json(const GeneralConstants& g) {
    json out;
    out["psi"] = jnum(g.psi);
    out["eta"] = jnum(g.eta);
    out["B"] = jnum(g.B);
    out["N"] = g.N;
    out["L"] = jnum(g.L);
    out["A"] = jnum(g.A);
    out["epsilon"] = jnum(g.epsilon);
    out["beta"] = jnum(g.beta);
    out["alpha"] = jnum(g.alpha);
    out["alpha_prime"] = jnum(g.alpha_prime);
    out["psi_prime"] = jnum(g.psi_prime);
    out["xi"] = jnum(g.xi);
    out["delta_prime"] = jnum(g.delta_prime);
    out["delta"] = jnum(g.delta);
    out["split_threshold"] = jnum(g.a);
    out["checks"] = {{"C1", g.c1}, {"C2", g.c2}, {"C3", g.c3}, {"C4", g.c4},
                     {"C5", g.c5}, {"C6", g.c6}, {"C7", g.c7}, {"C8", g.c8},
                     {"A1", g.a1}, {"A2", g.a2}, {"A3", g.a3}, {"A4", g.a4},
                     {"A5", g.a5}, {"A6", g.a6}, {"A7", g.a7}};
    out["all_pass"] = g.all_core();
    if (g.tail_evaluated) {
        out["tail"] = {{"xi", jnum(g.tail.xi)},
                       {"xi_prime", jnum(g.tail.xi_prime)},
                       {"eps_prime", jnum(g.tail.eps_prime)},
                       {"c_eps", jnum(g.tail.c_eps)},
                       {"T1", g.tail.t1},
                       {"T2", g.tail.t2},
                       {"T3", g.tail.t3}};
    }
    return out;
}

json deviation_json(const DeviationReport& rep, const Alphabet& alphabet) {
    json out;
    out["generator"] = rep.generator;
    out["seed"] = rep.seed;
    out["trials"] = rep.trials;
    out["bound"] = jnum(rep.bound);
    out["threshold"] = jnum(rep.threshold);
    out["relaxed"] = rep.relaxed;
    json states = json::array();
    for (const auto& s : rep.states) {
        states.push_back({{"state", alphabet.symbol(s.state)},
                          {"occupancy", jnum(s.nu_x)},
                          {"qualifying", s.qualifying},
                          {"deviations", s.deviations},
                          {"frequency", jnum(s.frequency)},
                          {"ci_lo", jnum(s.ci.lo)},
                          {"ci_hi", jnum(s.ci.hi)},
                          {"pass", s.pass}});
    }
    out["states"] = states;
    out["all_pass"] = rep.all_pass;
    return out;
}

json partition_json(const ObservedSequence& x, const Partition& part) {
    auto counts = count_transitions(x);
    json atoms = json::array();
    for (StateSet atom : part.atoms) {
        atoms.push_back({{"atom", x.alphabet.subset_to_string(atom)},
                         {"runs", run_count(counts, atom)},
                         {"visits", counts.visits(atom)}});
    }
    json out;
    out["split_threshold"] = jnum(part.a);
    out["atoms"] = atoms;
    return out;
}

json pieces_json(const PiecewiseChain& chain) {
    json pieces = json::array();
    for (const auto& pc : chain.pieces) {
        pieces.push_back({{"atom", chain.alphabet.subset_to_string(pc.atom)},
                          {"length", pc.length}});
    }
    return pieces;
}

// ── command handlers (0 = ok, 1 = verification failed) ────────────

int cmd_stats(const std::string& path, const OutputOptions& out) {
    auto x = read_sequence_file(path);
    auto counts = count_transitions(x);
    auto kernel = observed_transition_matrix(counts);
    json rep;
    rep["command"] = "stats";
    rep["input"] = path;
    rep["alphabet"] = x.alphabet.symbols;
    rep["length"] = x.entries.size();
    rep["transitions"] = counts.total;
    rep["exhaustive"] = is_exhaustive(x);
    rep["periodic"] = is_periodic(x);
    rep["occupancy"] = jvector(occupancy_measure(counts));
    json cm = json::array();
    for (int s = 0; s < counts.n_states; ++s) {
        json row = json::array();
        for (int t = 0; t < counts.n_states; ++t) row.push_back(counts.at(s, t));
        cm.push_back(row);
    }
    rep["transition_counts"] = cm;
    rep["observed_kernel"] = jmatrix(kernel.p);
    json unvisited = json::array();
    for (int s = 0; s < counts.n_states; ++s)
        if (kernel.unvisited[s]) unvisited.push_back(x.alphabet.symbol(s));
    rep["unvisited_states"] = unvisited;
    json runs = json::array();
    for (int s = 0; s < counts.n_states; ++s)
        runs.push_back({{"state", x.alphabet.symbol(s)},
                        {"runs", run_count(counts, StateSet{1} << s)}});
    rep["single_state_runs"] = runs;
    emit_report(rep, out);
    return 0;
}

int cmd_partition(const std::string& path, double a, const OutputOptions& out) {
    auto x = read_sequence_file(path);
    auto part = structure_partition(x, a);
    auto verify = verify_partition(x, part);
    json rep;
    rep["command"] = "partition";
    rep["input"] = path;
    rep["partition"] = partition_json(x, part);
    rep["p1_ok"] = verify.p1_ok;
    rep["p2_ok"] = verify.p2_ok;
    emit_report(rep, out);
    return (verify.p1_ok && verify.p2_ok) ? 0 : 1;
}

int cmd_analyze(const std::string& path, const std::string& set_tokens,
                const OutputOptions& out) {
    auto [kernel, alphabet] = read_kernel_with_alphabet(path);
    json rep;
    rep["command"] = "analyze";
    rep["input"] = path;
    rep["alphabet"] = alphabet.symbols;
    bool irreducible = is_irreducible(kernel);
    rep["irreducible"] = irreducible;
    if (!irreducible) {
        emit_report(rep, out);
        throw ReducibleChain("analysis needs an irreducible kernel");
    }
    rep["invariant"] = jvector(invariant_measure(kernel));
    rep["gamma"] = jnum(gamma_mixing_constant(kernel));
    if (!set_tokens.empty()) {
        StateSet C = alphabet.parse_subset(set_tokens);
        if (C == 0) throw ParameterOutOfRange("subset is empty");
        auto stats = mixing_stats(kernel, C);
        rep["set"] = alphabet.subset_to_string(C);
        rep["lambda"] = jnum(stats.lambda);
        rep["rho"] = jnum(stats.rho);
        rep["visit_length"] = jnum(stats.visit_len);
        rep["conductance"] = jnum(stats.conductance);
    }
    emit_report(rep, out);
    return 0;
}

int cmd_build(const std::string& path, double epsilon, double delta,
              std::optional<double> zeta, const std::string& chain_out,
              const OutputOptions& out) {
    auto x = read_sequence_file(path);
    auto build = build_basic(x, epsilon, delta, zeta);
    json rep;
    rep["command"] = "build";
    rep["input"] = path;
    rep["constants"] = constants_json(build.constants);
    rep["extended_transitions"] = build.xstar.transitions();
    rep["visit_threshold"] = jnum(build.visit_threshold);
    rep["partition"] = partition_json(build.xstar, build.partition);
    json dropped = json::array();
    for (StateSet atom : build.dropped_atoms)
        dropped.push_back(build.xstar.alphabet.subset_to_string(atom));
    rep["dropped_atoms"] = dropped;
    rep["pieces"] = pieces_json(build.chain);
    rep["initial"] = jvector(build.chain.initial);
    rep["structural_deviation"] = jnum(build.structural_deviation);
    rep["structural_bound"] = jnum(build.structural_bound);
    json mixing = json::array();
    for (const auto& e : verify_watched_mixing(build.xstar, build.partition, delta)) {
        mixing.push_back({{"atom", build.xstar.alphabet.subset_to_string(e.atom)},
                          {"applicable", e.applicable},
                          {"gamma", e.applicable ? jnum(e.gamma) : json("n/a")},
                          {"bound", jnum(e.bound)},
                          {"pass", e.applicable ? json(e.pass) : json("n/a")}});
    }
    rep["watched_mixing"] = mixing;
    if (!chain_out.empty()) {
        save_piecewise(chain_out, build.chain);
        rep["chain_file"] = chain_out;
    }
    emit_report(rep, out);
    return 0;
}

int cmd_simulate(const std::string& path, std::uint64_t seed, const OutputOptions& out) {
    auto chain = load_piecewise_file(path);
    auto real = simulate_piecewise(chain, seed);
    json rep;
    rep["command"] = "simulate";
    rep["input"] = path;
    rep["generator"] = kGeneratorName;
    rep["seed"] = seed;
    rep["length"] = real.size();
    std::vector<long long> occ(chain.alphabet.symbols.size(), 0);
    for (std::size_t i = 0; i + 1 < real.size(); ++i) occ[real[i]]++;
    json occupancy = json::array();
    for (std::size_t s = 0; s < occ.size(); ++s)
        occupancy.push_back(jnum(static_cast<double>(occ[s]) /
                                 static_cast<double>(chain.total_length)));
    rep["occupancy"] = occupancy;
    std::string tokens;
    for (std::size_t i = 0; i < real.size(); ++i) {
        if (i) tokens += (i % 40 == 0) ? '\n' : ' ';
        tokens += chain.alphabet.symbol(real[i]);
    }
    rep["realization"] = tokens;
    emit_report(rep, out);
    return 0;
}

int cmd_verify_basic(const std::string& path, double epsilon, double delta, double zeta,
                     long long trials, std::uint64_t seed, const OutputOptions& out) {
    auto x = read_sequence_file(path);
    auto build = build_basic(x, epsilon, delta, zeta);
    auto b2 = verify_b2(build.chain, build.xstar, epsilon);
    auto b1 = verify_b1(build.chain, build.xstar, epsilon, delta, zeta, trials, seed);
    json rep;
    rep["command"] = "verify-basic";
    rep["input"] = path;
    rep["constants"] = constants_json(build.constants);
    rep["pieces"] = pieces_json(build.chain);
    rep["structural"] = {{"max_deviation", jnum(b2.max_deviation)},
                         {"epsilon", jnum(b2.epsilon)},
                         {"pass", b2.pass}};
    rep["occupancy"] = deviation_json(b1, build.xstar.alphabet);
    bool ok = b2.pass && b1.all_pass;
    rep["verdict"] = ok ? "pass" : "fail";
    emit_report(rep, out);
    return ok ? 0 : 1;
}

struct HiddenInputs {
    ObservedSequence x;
    ProductPolyhedron V;
    TransitionMatrix b;
    GeneralConstants params;
    TypicalityCertificate cert;
};

HiddenInputs prepare_hidden(const std::string& seq_path, const std::string& poly_path,
                            const std::string& b_path, double psi, double eta,
                            json& rep) {
    HiddenInputs in{read_sequence_file(seq_path), read_polyhedra_file(poly_path),
                    {}, {}, {}};
    if (!(in.x.alphabet == in.V.alphabet))
        throw ParameterOutOfRange("sequence and polyhedra alphabets differ");
    if (!b_path.empty()) {
        in.b = read_kernel_file(b_path);
    } else {
        auto found = find_irreducible_b(in.V);
        if (!found)
            throw ParameterOutOfRange(
                "no irreducible kernel found in the polyhedra; supply one with --b");
        in.b = *found;
    }
    std::vector<int> sizes;
    for (const auto& P : in.V.per_state)
        sizes.push_back(static_cast<int>(P.vertices.size()));
    in.params = check_constants_general(in.V.size(), in.x.transitions(), psi, eta,
                                        compute_B(in.b), sizes);
    rep["constants"] = constants_json(in.params);
    rep["b_kernel"] = jmatrix(in.b);
    auto res = is_typical(in.x, in.V, in.params.delta, in.params.epsilon);
    if (!res.typical)
        throw ParameterOutOfRange(
            "sequence is not typical for these polyhedra at the derived parameters "
            "(blocking state " +
            in.V.alphabet.symbol(res.blocking_state) + ")");
    in.cert = *res.certificate;
    rep["witness_kernel"] = jmatrix(in.cert.v);
    return in;
}

json hidden_spec_json(const HiddenChainSpec& spec, bool materialize) {
    json out;
    out["extended_transitions"] = spec.n_star;
    out["total_length"] = spec.total_length;
    out["visit_threshold"] = jnum(spec.visit_threshold);
    json atoms = json::array();
    for (std::size_t k = 0; k < spec.atoms.size(); ++k) {
        atoms.push_back({{"atom", spec.alphabet.subset_to_string(spec.atoms[k])},
                         {"length", spec.piece_lengths[k]},
                         {"entry_distributions", jmatrix(spec.entry[k])}});
    }
    out["pieces"] = atoms;
    json dropped = json::array();
    for (StateSet atom : spec.dropped_atoms)
        dropped.push_back(spec.alphabet.subset_to_string(atom));
    out["dropped_atoms"] = dropped;
    out["initial_state"] = spec.alphabet.symbol(spec.initial_state);
    if (materialize) {
        json mats = json::array();
        for (std::size_t k = 0; k < spec.atoms.size(); ++k)
            mats.push_back(jmatrix(materialize_pi(spec, k).pi));
        out["pair_kernels"] = mats;
    }
    return out;
}

int cmd_hidden_build(const std::string& seq_path, const std::string& poly_path,
                     const std::string& b_path, double psi, double eta, bool materialize,
                     const OutputOptions& out) {
    json rep;
    rep["command"] = "hidden-build";
    rep["input"] = seq_path;
    auto in = prepare_hidden(seq_path, poly_path, b_path, psi, eta, rep);
    auto spec = build_hidden(in.x, in.V, in.b, in.params, in.cert);
    rep["spec"] = hidden_spec_json(spec, materialize);

    // informational closeness reports at the derived exponents
    json witness = json::array();
    for (const auto& e :
         witness_closeness_report(spec.xstar, spec.v, in.params.xi, eta)) {
        witness.push_back({{"state", spec.alphabet.symbol(e.state)},
                           {"visits", e.visits},
                           {"sup_dist", jnum(e.sup_dist)},
                           {"checked", e.checked},
                           {"pass", e.pass}});
    }
    rep["witness_closeness"] = witness;
    json aux = json::array();
    for (std::size_t k = 0; k < spec.atoms.size(); ++k) {
        if (set_size(spec.atoms[k]) < 2) {
            aux.push_back({{"atom", spec.alphabet.subset_to_string(spec.atoms[k])},
                           {"close", "n/a"},
                           {"checked_pairs", 0},
                           {"violations", 0}});
            continue;
        }
        auto q = q_k_kernel(spec.pxstar, spec.atoms[k], spec.v);
        auto close = closeness_check(spec.pxstar, q, spec.atoms[k], in.params.beta,
                                     3.0 * in.params.epsilon);
        aux.push_back({{"atom", spec.alphabet.subset_to_string(spec.atoms[k])},
                       {"close", close.close},
                       {"checked_pairs", close.checked.size()},
                       {"violations", close.violations.size()}});
    }
    rep["auxiliary_closeness"] = aux;
    emit_report(rep, out);
    return 0;
}

int cmd_typical(const std::string& seq_path, const std::string& poly_path, double delta,
                double epsilon, const OutputOptions& out) {
    auto x = read_sequence_file(seq_path);
    auto V = read_polyhedra_file(poly_path);
    auto res = is_typical(x, V, delta, epsilon);
    json rep;
    rep["command"] = "typical";
    rep["input"] = seq_path;
    rep["delta"] = jnum(delta);
    rep["epsilon"] = jnum(epsilon);
    rep["typical"] = res.typical;
    if (res.typical) {
        rep["witness_kernel"] = jmatrix(res.certificate->v);
        json weights = json::array();
        for (const auto& w : res.certificate->weights) weights.push_back(jvector(w));
        rep["vertex_weights"] = weights;
        json active = json::array();
        for (auto [s, t] : res.certificate->active_pairs)
            active.push_back(x.alphabet.symbol(s) + "->" + x.alphabet.symbol(t));
        rep["active_pairs"] = active;
    } else {
        rep["blocking_state"] = x.alphabet.symbol(res.blocking_state);
    }
    emit_report(rep, out);
    return res.typical ? 0 : 1;
}

int cmd_verify_general(const std::string& seq_path, const std::string& poly_path,
                       const std::string& b_path, double psi, double eta,
                       long long trials, std::uint64_t seed, const OutputOptions& out) {
    json rep;
    rep["command"] = "verify-general";
    rep["input"] = seq_path;
    auto in = prepare_hidden(seq_path, poly_path, b_path, psi, eta, rep);
    auto spec = build_hidden(in.x, in.V, in.b, in.params, in.cert);
    rep["spec"] = hidden_spec_json(spec, false);
    auto ver = verify_g1_g2(spec, eta, in.params.delta, psi, trials, seed);
    rep["occupancy"] = deviation_json(ver.g1, spec.alphabet);
    rep["row_deviation_count"] = {{"mean", jnum(ver.g2.mean_n0)},
                                  {"max", jnum(ver.g2.max_n0)},
                                  {"bound", jnum(ver.g2.bound)},
                                  {"B", jnum(ver.g2.B)},
                                  {"relaxed", ver.g2.relaxed},
                                  {"pass", ver.g2.pass}};
    bool ok = ver.g1.all_pass && ver.g2.pass;
    rep["verdict"] = ok ? "pass" : "fail";
    emit_report(rep, out);
    return ok ? 0 : 1;
}

int cmd_thm3(const std::string& path, long long n, double epsilon,
             const std::string& start_token, long long trials, std::uint64_t seed,
             const OutputOptions& out) {
    auto [kernel, alphabet] = read_kernel_with_alphabet(path);
    int start = alphabet.index_of(start_token);
    if (start < 0) throw ParseError("unknown start state '" + start_token + "'");
    auto rep3 = occupancy_tail_experiment(kernel, n, epsilon, start, trials, seed);
    json rep;
    rep["command"] = "thm3";
    rep["input"] = path;
    rep["generator"] = kGeneratorName;
    rep["seed"] = seed;
    rep["trials"] = trials;
    rep["n"] = n;
    rep["epsilon"] = jnum(epsilon);
    rep["gamma"] = jnum(rep3.gamma);
    rep["bound"] = jnum(rep3.bound);
    rep["vacuous"] = rep3.vacuous;
    json states = json::array();
    for (std::size_t s = 0; s < rep3.frequency.size(); ++s) {
        states.push_back({{"state", alphabet.symbol(static_cast<int>(s))},
                          {"invariant", jnum(rep3.mu[s])},
                          {"frequency", jnum(rep3.frequency[s])},
                          {"ci_lo", jnum(rep3.ci[s].lo)},
                          {"ci_hi", jnum(rep3.ci[s].hi)}});
    }
    rep["states"] = states;
    rep["shift_gap_max"] = jnum(rep3.max_shift_gap);
    rep["shift_gap_bound"] = jnum(rep3.shift_bound);
    rep["pass"] = rep3.pass;
    emit_report(rep, out);
    return rep3.pass ? 0 : 1;
}

int cmd_thm5(const std::string& poly_path, long long N, double delta, double epsilon,
             long long realizations, std::uint64_t seed, const std::string& policy_name,
             double min_fraction, const OutputOptions& out) {
    auto V = read_polyhedra_file(poly_path);
    VProcessPolicy policy;
    policy.kind = parse_policy_kind(policy_name);
    auto est = typical_fraction_estimate(V, policy, N, delta, epsilon, realizations, seed);
    json rep;
    rep["command"] = "thm5";
    rep["input"] = poly_path;
    rep["generator"] = kGeneratorName;
    rep["seed"] = seed;
    rep["policy"] = policy_name;
    rep["N"] = N;
    rep["delta"] = jnum(delta);
    rep["epsilon"] = jnum(epsilon);
    rep["realizations"] = est.realizations;
    rep["typical"] = est.typical;
    rep["fraction"] = jnum(est.fraction);
    rep["ci_lo"] = jnum(est.ci.lo);
    rep["ci_hi"] = jnum(est.ci.hi);
    bool ok = est.fraction >= min_fraction;
    rep["min_fraction"] = jnum(min_fraction);
    rep["pass"] = ok;
    emit_report(rep, out);
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sequence approximation by piecewise homogeneous Markov chains"};
    app.require_subcommand(1);

    std::string seq_path, matrix_path, poly_path, b_path, chain_path, set_tokens;
    std::string start_token = "0", policy_name = "fixed";
    double a = 1.0, epsilon = 0.1, delta = 0.1, psi = 0.7, eta = 0.1;
    double zeta_vb = 0.1, min_fraction = 0.0;
    std::optional<double> zeta;
    long long trials = 1000, n_steps = 1000, big_n = 100000, realizations = 100;
    std::uint64_t seed = 1;
    bool materialize = false;
    OutputOptions out_stats, out_partition, out_analyze, out_build, out_sim, out_vb,
        out_hb, out_typ, out_vg, out_t3, out_t5, out_cb, out_cg, out_ct;

    auto* stats = app.add_subcommand("stats", "sequence statistics");
    stats->add_option("sequence", seq_path)->required();
    add_output_options(stats, out_stats);

    auto* partition = app.add_subcommand("partition", "run-structure partition");
    partition->add_option("sequence", seq_path)->required();
    partition->add_option("--a", a, "split threshold")->required();
    add_output_options(partition, out_partition);

    auto* analyze = app.add_subcommand("analyze", "chain quantities from a matrix file");
    analyze->add_option("matrix", matrix_path)->required();
    analyze->add_option("--set", set_tokens, "comma-separated subset");
    add_output_options(analyze, out_analyze);

    auto* build = app.add_subcommand("build", "piecewise chain construction");
    build->add_option("sequence", seq_path)->required();
    build->add_option("--epsilon", epsilon)->required();
    build->add_option("--delta", delta)->required();
    build->add_option(
        "--zeta",
        [&zeta](const std::vector<std::string>& vals) {
            zeta = std::stod(vals[0]);
            return true;
        },
        "tail exponent (defaults to delta)");
    build->add_option("--chain-out", chain_path, "write the chain document here");
    add_output_options(build, out_build);

    auto* simulate = app.add_subcommand("simulate", "one realization of a saved chain");
    simulate->add_option("chain", chain_path)->required();
    simulate->add_option("--seed", seed);
    add_output_options(simulate, out_sim);

    auto* vb = app.add_subcommand("verify-basic", "build and verify occupancy/rows");
    vb->add_option("sequence", seq_path)->required();
    vb->add_option("--epsilon", epsilon)->required();
    vb->add_option("--delta", delta)->required();
    vb->add_option("--zeta", zeta_vb)->required();
    vb->add_option("--trials", trials);
    vb->add_option("--seed", seed);
    add_output_options(vb, out_vb);

    auto* hb = app.add_subcommand("hidden-build", "constrained construction");
    hb->add_option("sequence", seq_path)->required();
    hb->add_option("--psi", psi)->required();
    hb->add_option("--eta", eta)->required();
    hb->add_option("--polyhedra", poly_path)->required();
    hb->add_option("--b", b_path, "irreducible kernel file (found automatically otherwise)");
    hb->add_flag("--materialize", materialize, "include explicit pair-space kernels");
    add_output_options(hb, out_hb);

    auto* typ = app.add_subcommand("typical", "typicality decision");
    typ->add_option("sequence", seq_path)->required();
    typ->add_option("--delta", delta)->required();
    typ->add_option("--epsilon", epsilon)->required();
    typ->add_option("--polyhedra", poly_path)->required();
    add_output_options(typ, out_typ);

    auto* vg = app.add_subcommand("verify-general", "constrained build and verification");
    vg->add_option("sequence", seq_path)->required();
    vg->add_option("--psi", psi)->required();
    vg->add_option("--eta", eta)->required();
    vg->add_option("--polyhedra", poly_path)->required();
    vg->add_option("--b", b_path);
    vg->add_option("--trials", trials);
    vg->add_option("--seed", seed);
    add_output_options(vg, out_vg);

    auto* t3 = app.add_subcommand("thm3", "occupancy tail experiment");
    t3->add_option("matrix", matrix_path)->required();
    t3->add_option("--n", n_steps)->required();
    t3->add_option("--epsilon", epsilon)->required();
    t3->add_option("--start", start_token);
    t3->add_option("--trials", trials);
    t3->add_option("--seed", seed);
    add_output_options(t3, out_t3);

    auto* t5 = app.add_subcommand("thm5", "typicality frequency experiment");
    t5->add_option("--polyhedra", poly_path)->required();
    t5->add_option("--N", big_n)->required();
    t5->add_option("--delta", delta)->required();
    t5->add_option("--epsilon", epsilon)->required();
    t5->add_option("--realizations", realizations);
    t5->add_option("--seed", seed);
    t5->add_option("--policy", policy_name, "fixed | iid-random | cycling");
    t5->add_option("--min-fraction", min_fraction, "verdict threshold");
    add_output_options(t5, out_t5);

    auto* constants = app.add_subcommand("constants", "size-condition reports");
    constants->require_subcommand(1);
    int c_states = 2;
    long long c_n = 1000;
    double c_eps = 0.1, c_delta = 0.01, c_zeta = 0.01, c_psi = 0.7, c_eta = 0.1,
           c_b = 1.0, c_xi = 0.01;
    std::vector<int> c_vstar;
    auto* cb = constants->add_subcommand("basic");
    cb->add_option("--states", c_states)->required();
    cb->add_option("--N", c_n)->required();
    cb->add_option("--epsilon", c_eps)->required();
    cb->add_option("--delta", c_delta)->required();
    cb->add_option("--zeta", c_zeta)->required();
    add_output_options(cb, out_cb);
    auto* cg = constants->add_subcommand("general");
    cg->add_option("--states", c_states)->required();
    cg->add_option("--N", c_n)->required();
    cg->add_option("--psi", c_psi)->required();
    cg->add_option("--eta", c_eta)->required();
    cg->add_option("--B", c_b)->required();
    cg->add_option("--vstar", c_vstar, "vertex counts per state");
    add_output_options(cg, out_cg);
    auto* ct = constants->add_subcommand("typicality");
    ct->add_option("--states", c_states)->required();
    ct->add_option("--N", c_n)->required();
    ct->add_option("--delta", c_delta)->required();
    ct->add_option("--epsilon", c_eps)->required();
    ct->add_option("--xi", c_xi)->required();
    ct->add_option("--vstar", c_vstar)->required();
    add_output_options(ct, out_ct);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;  // help exits cleanly, bad input is 2
    }

    try {
        if (*stats) return cmd_stats(seq_path, out_stats);
        if (*partition) return cmd_partition(seq_path, a, out_partition);
        if (*analyze) return cmd_analyze(matrix_path, set_tokens, out_analyze);
        if (*build)
            return cmd_build(seq_path, epsilon, delta, zeta, chain_path, out_build);
        if (*simulate) return cmd_simulate(chain_path, seed, out_sim);
        if (*vb)
            return cmd_verify_basic(seq_path, epsilon, delta, zeta_vb, trials, seed,
                                    out_vb);
        if (*hb)
            return cmd_hidden_build(seq_path, poly_path, b_path, psi, eta, materialize,
                                    out_hb);
        if (*typ) return cmd_typical(seq_path, poly_path, delta, epsilon, out_typ);
        if (*vg)
            return cmd_verify_general(seq_path, poly_path, b_path, psi, eta, trials,
                                      seed, out_vg);
        if (*t3)
            return cmd_thm3(matrix_path, n_steps, epsilon, start_token, trials, seed,
                            out_t3);
        if (*t5)
            return cmd_thm5(poly_path, big_n, delta, epsilon, realizations, seed,
                            policy_name, min_fraction, out_t5);
        if (*cb) {
            json rep;
            rep["command"] = "constants basic";
            rep["constants"] = constants_json(
                check_constants_basic(c_states, c_n, c_eps, c_delta, c_zeta));
            emit_report(rep, out_cb);
            return 0;
        }
        if (*cg) {
            json rep;
            rep["command"] = "constants general";
            rep["constants"] = constants_json(
                check_constants_general(c_states, c_n, c_psi, c_eta, c_b, c_vstar));
            emit_report(rep, out_cg);
            return 0;
        }
        if (*ct) {
            auto tail =
                check_constants_typicality(c_states, c_n, c_delta, c_eps, c_xi, c_vstar);
            json rep;
            rep["command"] = "constants typicality";
            rep["delta"] = jnum(tail.delta);
            rep["epsilon"] = jnum(tail.epsilon);
            rep["xi"] = jnum(tail.xi);
            rep["xi_prime"] = jnum(tail.xi_prime);
            rep["eps_prime"] = jnum(tail.eps_prime);
            rep["c_eps"] = jnum(tail.c_eps);
            rep["checks"] = {{"T1", tail.t1}, {"T2", tail.t2}, {"T3", tail.t3}};
            emit_report(rep, out_ct);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
