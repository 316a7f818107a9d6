#include "mmi/mixed_mp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <random>

namespace mmi {

namespace {

constexpr double kLogFloor = 1e-300;

double lse(const std::vector<double>& v) { return log_sum_exp(v); }

void normalize_log(std::vector<double>& lv) {
    double z = lse(lv);
    for (double& x : lv) x -= z;
}

struct Engine {
    const PairwiseModel& m;
    std::vector<std::vector<double>> lm;  // normalized log messages, 2 per edge

    explicit Engine(const PairwiseModel& model) : m(model) {
        lm.resize(2 * m.num_edges());
        for (int e = 0; e < m.num_edges(); ++e) {
            auto [i, j] = m.edge(e);
            lm[2 * e].assign(m.card(j), -std::log(double(m.card(j))));
            lm[2 * e + 1].assign(m.card(i), -std::log(double(m.card(i))));
        }
    }

    int dir(int e, int from) const { return 2 * e + (m.edge(e).first == from ? 0 : 1); }

    // theta_i plus all incoming messages, per node.
    std::vector<std::vector<double>> incoming() const {
        std::vector<std::vector<double>> L(m.num_nodes());
        for (int i = 0; i < m.num_nodes(); ++i) {
            L[i] = m.theta_node(i);
            for (auto [k, e] : m.neighbors(i)) {
                const auto& msg = lm[dir(e, k)];
                for (int x = 0; x < m.card(i); ++x) L[i][x] += msg[x];
            }
        }
        return L;
    }

    double theta(int e, int from, int x_from, int x_to) const {
        auto [i, j] = m.edge(e);
        return from == i ? m.theta_edge(e, x_from, x_to) : m.theta_edge(e, x_to, x_from);
    }

    // One synchronous round; `update` computes the raw (unnormalized) log
    // message for a direction. Returns the residual in probability scale.
    template <typename UpdateFn>
    double round(double damping, UpdateFn&& update) {
        auto L = incoming();
        std::vector<std::vector<double>> next(lm.size());
        for (int e = 0; e < m.num_edges(); ++e) {
            auto [i, j] = m.edge(e);
            next[dir(e, i)] = update(e, i, j, L);
            next[dir(e, j)] = update(e, j, i, L);
        }
        double res = 0.0;
        for (size_t d = 0; d < lm.size(); ++d) {
            normalize_log(next[d]);
            if (damping > 0.0) {
                for (size_t x = 0; x < next[d].size(); ++x)
                    next[d][x] = (1.0 - damping) * next[d][x] + damping * lm[d][x];
                normalize_log(next[d]);
            }
            for (size_t x = 0; x < next[d].size(); ++x)
                res = std::max(res, std::fabs(std::exp(next[d][x]) - std::exp(lm[d][x])));
        }
        lm.swap(next);
        return res;
    }

    bool finite() const {
        for (const auto& v : lm)
            for (double x : v)
                if (!std::isfinite(x)) return false;
        return true;
    }
};

Beliefs weighted_beliefs(const Engine& eng, const FreeEnergyWeights& w) {
    const auto& m = eng.m;
    auto L = eng.incoming();
    Beliefs b;
    b.node.resize(m.num_nodes());
    for (int i = 0; i < m.num_nodes(); ++i) {
        std::vector<double> lb(m.card(i));
        for (int x = 0; x < m.card(i); ++x) lb[x] = L[i][x] / w.node[i];
        normalize_log(lb);
        b.node[i].resize(m.card(i));
        for (int x = 0; x < m.card(i); ++x) b.node[i][x] = std::exp(lb[x]);
    }
    b.edge.resize(m.num_edges());
    for (int e = 0; e < m.num_edges(); ++e) {
        auto [i, j] = m.edge(e);
        int ci = m.card(i), cj = m.card(j);
        std::vector<double> lt(ci * cj);
        const auto& mij = eng.lm[eng.dir(e, i)];
        const auto& mji = eng.lm[eng.dir(e, j)];
        for (int a = 0; a < ci; ++a)
            for (int c = 0; c < cj; ++c)
                lt[a * cj + c] = std::log(std::max(b.node[i][a], kLogFloor)) +
                                 std::log(std::max(b.node[j][c], kLogFloor)) +
                                 (m.theta_edge(e, a, c) - mij[c] - mji[a]) / w.edge[e];
        normalize_log(lt);
        b.edge[e].resize(ci * cj);
        for (int k = 0; k < ci * cj; ++k) b.edge[e][k] = std::exp(lt[k]);
    }
    return b;
}

MixedMarginals mixed_beliefs(const Engine& eng, const EdgeAppearance& rho) {
    const auto& m = eng.m;
    auto L = eng.incoming();
    MixedMarginals b;
    b.node.resize(m.num_nodes());
    for (int i = 0; i < m.num_nodes(); ++i) {
        std::vector<double> lb = L[i];
        normalize_log(lb);
        b.node[i].resize(m.card(i));
        for (int x = 0; x < m.card(i); ++x) b.node[i][x] = std::exp(lb[x]);
    }
    b.edge.resize(m.num_edges());
    for (int e = 0; e < m.num_edges(); ++e) {
        auto [i, j] = m.edge(e);
        int ci = m.card(i), cj = m.card(j);
        std::vector<double> lt(ci * cj);
        const auto& mij = eng.lm[eng.dir(e, i)];
        const auto& mji = eng.lm[eng.dir(e, j)];
        for (int a = 0; a < ci; ++a)
            for (int c = 0; c < cj; ++c)
                lt[a * cj + c] = std::log(std::max(b.node[i][a], kLogFloor)) +
                                 std::log(std::max(b.node[j][c], kLogFloor)) +
                                 (m.theta_edge(e, a, c) - mij[c] - mji[a]) / rho.rho[e];
        normalize_log(lt);
        b.edge[e].resize(ci * cj);
        for (int k = 0; k < ci * cj; ++k) b.edge[e][k] = std::exp(lt[k]);
    }
    return b;
}

void fill_decode(SolveReport& rep, const std::vector<std::vector<double>>& node_beliefs,
                 const PairwiseModel& m) {
    rep.decoded_xb = decode(node_beliefs, m, &rep.decode_tie);
    rep.max_belief_gap = 0.0;
    for (int i = 0; i < m.num_nodes(); ++i) {
        if (!m.is_max(i)) continue;
        double mx = *std::max_element(node_beliefs[i].begin(), node_beliefs[i].end());
        rep.max_belief_gap = std::max(rep.max_belief_gap, 1.0 - mx);
    }
    try {
        rep.q_decoded = q_of_xb(m, rep.decoded_xb);
    } catch (const StateSpaceExceeded&) {
        rep.q_decoded.reset();
    }
}

}  // namespace

std::pair<Beliefs, SolveReport> weighted_mp_fixed_point(const PairwiseModel& m,
                                                        const FreeEnergyWeights& w,
                                                        const SolveConfig& cfg,
                                                        MessageSet* warm) {
    for (double v : w.node)
        if (!(v > 0.0)) throw ModelError("weighted message passing needs positive node weights");
    for (double v : w.edge)
        if (!(v > 0.0)) throw ModelError("weighted message passing needs positive edge weights");

    Engine eng(m);
    if (warm && !warm->log_msg.empty()) eng.lm = warm->log_msg;

    auto update = [&](int e, int i, int j, const std::vector<std::vector<double>>& L) {
        const auto& rev = eng.lm[eng.dir(e, j)];
        double we = w.edge[e], wi = w.node[i];
        std::vector<double> raw(m.card(j)), terms(m.card(i));
        for (int xj = 0; xj < m.card(j); ++xj) {
            for (int xi = 0; xi < m.card(i); ++xi)
                terms[xi] = L[i][xi] / wi + (eng.theta(e, i, xi, xj) - rev[xi]) / we;
            raw[xj] = we * lse(terms);
        }
        return raw;
    };

    SolveReport rep;
    std::deque<std::vector<std::vector<double>>> tail;
    int it = 0;
    for (; it < cfg.max_iterations; ++it) {
        double res = eng.round(cfg.damping, update);
        rep.residual = res;
        if (!eng.finite()) {
            rep.status = SolveStatus::Failed;
            break;
        }
        if (res <= cfg.tolerance) {
            rep.status = SolveStatus::Converged;
            ++it;
            break;
        }
        if (it >= cfg.max_iterations - 10) {
            tail.push_back(eng.lm);
        }
    }
    rep.iterations = it;

    Beliefs best = weighted_beliefs(eng, w);
    double best_f = eval_free_energy(best, m, w);
    if (rep.status == SolveStatus::NotConverged) {
        // Best of the last iterates by free energy.
        for (auto& snap : tail) {
            Engine alt(m);
            alt.lm = std::move(snap);
            Beliefs b = weighted_beliefs(alt, w);
            double f = eval_free_energy(b, m, w);
            if (f > best_f) {
                best_f = f;
                best = std::move(b);
            }
        }
    }
    rep.objective = best_f;
    rep.consistency = consistency_residual(best, m);
    fill_decode(rep, best.node, m);
    if (warm) warm->log_msg = eng.lm;
    return {std::move(best), rep};
}

std::pair<MixedMarginals, SolveReport> mixed_mp_fixed_point(const PairwiseModel& m,
                                                            const EdgeAppearance& rho,
                                                            const SolveConfig& cfg,
                                                            bool jiang_variant) {
    if (static_cast<int>(rho.rho.size()) != m.num_edges())
        throw ModelError("edge appearance vector does not cover all edges");
    for (double r : rho.rho)
        if (!(r > 0.0)) throw ModelError("mixed message passing needs positive rho on every edge");

    auto run_loop = [&](Engine& eng, double damping, SolveReport& rep) {
        auto update = [&](int e, int i, int j, const std::vector<std::vector<double>>& L) {
            const auto& rev = eng.lm[eng.dir(e, j)];
            double r = rho.rho[e];
            std::vector<double> raw(m.card(j));
            std::vector<double> terms(m.card(i));
            if (m.is_sum(i)) {  // A -> V: sum message
                for (int xj = 0; xj < m.card(j); ++xj) {
                    for (int xi = 0; xi < m.card(i); ++xi)
                        terms[xi] = L[i][xi] + (eng.theta(e, i, xi, xj) - rev[xi]) / r;
                    raw[xj] = r * lse(terms);
                }
            } else if (m.is_max(j) || jiang_variant) {  // B -> B (or Jiang's B -> A)
                double rr = (m.is_max(j)) ? r : 1.0;
                for (int xj = 0; xj < m.card(j); ++xj) {
                    double best = -std::numeric_limits<double>::infinity();
                    for (int xi = 0; xi < m.card(i); ++xi)
                        best = std::max(best,
                                        rr * L[i][xi] + eng.theta(e, i, xi, xj) - rev[xi]);
                    raw[xj] = best;
                }
            } else {  // B -> A: sum restricted to the argmax states of psi_i m_~i
                double mx = *std::max_element(L[i].begin(), L[i].end());
                double band = cfg.argmax_inclusion_tol * (1.0 + std::fabs(mx));
                for (int xj = 0; xj < m.card(j); ++xj) {
                    terms.clear();
                    for (int xi = 0; xi < m.card(i); ++xi)
                        if (L[i][xi] >= mx - band)
                            terms.push_back((eng.theta(e, i, xi, xj) - rev[xi]) / r);
                    raw[xj] = r * lse(terms);
                }
            }
            return raw;
        };

        int it = 0;
        for (; it < cfg.max_iterations; ++it) {
            double res = eng.round(damping, update);
            rep.residual = res;
            if (!eng.finite()) {
                rep.status = SolveStatus::Failed;
                break;
            }
            if (res <= cfg.tolerance) {
                rep.status = SolveStatus::Converged;
                ++it;
                break;
            }
        }
        rep.iterations = it;
    };

    SolveReport rep;
    std::optional<Engine> eng;
    eng.emplace(m);
    run_loop(*eng, cfg.damping, rep);
    if (rep.status == SolveStatus::Failed) {
        // One retry with strong damping before giving up.
        rep = SolveReport{};
        eng.emplace(m);
        run_loop(*eng, std::max(cfg.damping, 0.5), rep);
        if (rep.status == SolveStatus::Failed) {
            MixedMarginals empty;
            return {empty, rep};
        }
    }

    MixedMarginals b = mixed_beliefs(*eng, rho);
    rep.consistency = consistency_residual(b.as_beliefs(), m);
    fill_decode(rep, b.node, m);

    // The mixed marginals are softened, so score the rounded point instead:
    // max nodes clamped to the decode, sum beliefs kept as they are.
    rep.objective = eval_free_energy(harden_at_decode(b.as_beliefs(), m, rep.decoded_xb), m,
                                     weights_trw_truncated(m, rho));
    return {std::move(b), rep};
}

std::vector<int> decode(const std::vector<std::vector<double>>& node_beliefs,
                        const PairwiseModel& m, bool* tie) {
    std::vector<int> xb;
    bool tied = false;
    for (int i = 0; i < m.num_nodes(); ++i) {
        if (!m.is_max(i)) continue;
        const auto& b = node_beliefs[i];
        int best = 0;
        for (int x = 1; x < m.card(i); ++x)
            if (b[x] > b[best]) best = x;
        for (int x = 0; x < m.card(i); ++x)
            if (x != best && std::fabs(b[x] - b[best]) < 1e-9) tied = true;
        xb.push_back(best);
    }
    if (tie) *tie = tied;
    return xb;
}

double ReparamReport::worst() const {
    return std::max(std::max(admissibility, sum_res), std::max(max_res, argmax_res));
}

ReparamReport check_reparam(const MixedMarginals& b, const PairwiseModel& m,
                            const EdgeAppearance& rho, int samples, uint64_t seed) {
    ReparamReport rep;

    // Admissibility: log of the reparameterized product minus theta(x) must
    // be constant across joint states.
    std::mt19937_64 rng(seed);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::vector<int> x(m.num_nodes(), 0);
    for (int s = 0; s < samples; ++s) {
        if (s > 0)
            for (int i = 0; i < m.num_nodes(); ++i)
                x[i] = std::uniform_int_distribution<int>(0, m.card(i) - 1)(rng);
        double g = 0.0;
        for (int i = 0; i < m.num_nodes(); ++i)
            g += std::log(std::max(b.node[i][x[i]], kLogFloor));
        for (int e = 0; e < m.num_edges(); ++e) {
            auto [i, j] = m.edge(e);
            double bij = b.edge[e][x[i] * m.card(j) + x[j]];
            g += rho.rho[e] * (std::log(std::max(bij, kLogFloor)) -
                               std::log(std::max(b.node[i][x[i]], kLogFloor)) -
                               std::log(std::max(b.node[j][x[j]], kLogFloor)));
        }
        g -= m.score(x);
        lo = std::min(lo, g);
        hi = std::max(hi, g);
    }
    rep.admissibility = hi - lo;

    auto argmax_set = [&](int i) {
        const auto& bi = b.node[i];
        double mx = *std::max_element(bi.begin(), bi.end());
        std::vector<int> s;
        for (int v = 0; v < m.card(i); ++v)
            if (bi[v] >= mx - 1e-9 * (1.0 + mx)) s.push_back(v);
        return s;
    };

    // The belief tables are defined only up to scale, so each collapsed
    // vector is renormalized before comparing against the node belief.
    auto residual_to = [&](std::vector<double> v, const std::vector<double>& target) {
        double z = 0.0;
        for (double x : v) z += x;
        if (z <= 0.0) return 1.0;
        double r = 0.0;
        for (size_t x = 0; x < v.size(); ++x)
            r = std::max(r, std::fabs(v[x] / z - target[x]));
        return r;
    };

    for (int e = 0; e < m.num_edges(); ++e) {
        auto [i, j] = m.edge(e);
        int cj = m.card(j);
        auto entry = [&](int a, int c) { return b.edge[e][a * cj + c]; };
        for (int from : {i, j}) {
            int to = from == i ? j : i;
            int cf = m.card(from), ct = m.card(to);
            auto at = [&](int xf, int xt) { return from == i ? entry(xf, xt) : entry(xt, xf); };
            std::vector<double> v(ct, 0.0);
            if (m.is_sum(from)) {  // (a)
                for (int xt = 0; xt < ct; ++xt)
                    for (int xf = 0; xf < cf; ++xf) v[xt] += at(xf, xt);
                rep.sum_res = std::max(rep.sum_res, residual_to(v, b.node[to]));
            } else if (m.is_max(to)) {  // (b)
                for (int xt = 0; xt < ct; ++xt)
                    for (int xf = 0; xf < cf; ++xf) v[xt] = std::max(v[xt], at(xf, xt));
                rep.max_res = std::max(rep.max_res, residual_to(v, b.node[to]));
            } else {  // (c)
                auto s_from = argmax_set(from);
                for (int xt = 0; xt < ct; ++xt)
                    for (int xf : s_from) v[xt] += at(xf, xt);
                rep.argmax_res = std::max(rep.argmax_res, residual_to(v, b.node[to]));
            }
        }
    }
    return rep;
}

AnnealResult anneal_solve(const PairwiseModel& m, const FreeEnergyWeights& fhat_weights,
                          const std::vector<std::pair<int, double>>& rho_b,
                          const std::vector<double>& eps_schedule, const SolveConfig& cfg) {
    auto cls = classify_edges(m);
    std::vector<double> eb_rho(m.num_edges(), -1.0);
    for (auto [e, r] : rho_b) eb_rho[e] = r;
    for (int e : cls.e_b)
        if (eb_rho[e] < 0.0) throw ModelError("rho_b missing an E_B edge");

    bool concave = check_provably_concave(m, rho_b).has_value();

    AnnealResult out;
    MessageSet warm;
    for (double eps : eps_schedule) {
        FreeEnergyWeights w = fhat_weights;
        for (int i = 0; i < m.num_nodes(); ++i)
            if (m.is_max(i)) w.node[i] = eps;
        for (int e : cls.e_b) w.edge[e] = eps * eb_rho[e];
        AnnealStep step;
        step.epsilon = eps;
        auto [b, rep] = weighted_mp_fixed_point(m, w, cfg, &warm);
        // Small max-node weights can make undamped updates oscillate; the
        // objective is unchanged, so escalate damping until the step settles.
        for (double d : {0.5, 0.8, 0.95}) {
            if (rep.converged()) break;
            SolveConfig retry = cfg;
            retry.damping = std::max(cfg.damping, d);
            std::tie(b, rep) = weighted_mp_fixed_point(m, w, retry, &warm);
        }
        step.fhat = eval_free_energy(b, m, fhat_weights);
        step.fhat_eps = eval_free_energy(b, m, w);
        step.report = rep;
        step.report.concave_weighting = concave;
        step.beliefs = std::move(b);
        out.steps.push_back(std::move(step));
    }
    if (!out.steps.empty()) {
        out.final_beliefs = out.steps.back().beliefs;
        out.final_report = out.steps.back().report;
        out.final_report.objective = out.steps.back().fhat;
    }
    return out;
}

GlobalCertificate certify_global(const PairwiseModel& m, const SolveReport& report,
                                 const EdgeAppearance& rho, double tol) {
    GlobalCertificate c;
    if (!report.converged()) {
        c.reason = "solver did not converge";
        return c;
    }
    if (report.concave_weighting && report.max_belief_gap <= tol) {
        c.verdict = CertVerdict::Global;
        c.reason = "integral max beliefs at a concave global maximum";
        return c;
    }
    auto cls = classify_edges(m);
    if (!is_ab_tree(m)) {
        c.reason = "structure is not an A-B tree";
        return c;
    }
    for (int e : cls.e_a) {
        if (std::fabs(rho.rho[e] - 1.0) > 1e-12) {
            c.reason = "rho != 1 on E_A";
            return c;
        }
    }
    if (report.q_decoded && std::fabs(*report.q_decoded - report.objective) <= tol) {
        c.verdict = CertVerdict::Global;
        c.reason = "decoded Q matches the free-energy value";
        return c;
    }
    c.reason = "objective does not match decoded Q";
    return c;
}

bool certify_local(const PairwiseModel& m, const std::vector<int>& x_b, int radius,
                   const OracleCaps& caps) {
    double q0 = q_of_xb(m, x_b, caps);
    std::vector<int> bnodes = m.max_nodes();
    int nb = static_cast<int>(bnodes.size());
    radius = std::min(radius, nb);
    // Enumerate flipped position subsets of size <= radius.
    std::vector<int> idx;
    std::vector<int> alt = x_b;
    uint64_t work = 0;
    auto explore = [&](auto&& self, int start, int depth) -> bool {
        if (depth > 0) {
            // All joint reassignments of the chosen positions differing everywhere.
            std::vector<int> cur(depth, 0);
            for (;;) {
                bool differs = true;
                for (int k = 0; k < depth; ++k) {
                    int node = bnodes[idx[k]];
                    int v = cur[k] >= x_b[idx[k]] ? cur[k] + 1 : cur[k];  // skip original
                    if (v >= m.card(node)) {
                        differs = false;
                        break;
                    }
                    alt[idx[k]] = v;
                }
                if (differs) {
                    if (++work > (uint64_t(1) << 22))
                        throw StateSpaceExceeded("neighborhood too large for local certificate");
                    if (q_of_xb(m, alt, caps) > q0 + 1e-9) return false;
                }
                int k = 0;
                for (; k < depth; ++k) {
                    int node = bnodes[idx[k]];
                    if (++cur[k] < m.card(node) - 1) break;
                    cur[k] = 0;
                }
                if (k == depth) break;
            }
            for (int k = 0; k < depth; ++k) alt[idx[k]] = x_b[idx[k]];
        }
        if (depth == radius) return true;
        for (int p = start; p < nb; ++p) {
            idx.push_back(p);
            if (!self(self, p + 1, depth + 1)) return false;
            idx.pop_back();
        }
        return true;
    };
    return explore(explore, 0, 0);
}

}  // namespace mmi
