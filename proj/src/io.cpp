#include "bcirl/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace bcirl {

using nlohmann::json;

namespace {

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("parse error in " + path + ": " + e.what());
    }
    return j;
}

void write_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
}

const json& field(const json& j, const std::string& name, const std::string& path) {
    if (!j.contains(name))
        throw std::runtime_error(path + ": missing field '" + name + "'");
    return j.at(name);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.precision(17);
    return out;
}

}  // namespace

void save_mdp(const TabularMdp& mdp, const std::string& path) {
    json j;
    j["num_states"] = mdp.num_states;
    j["num_actions"] = mdp.num_actions;
    j["discount"] = mdp.discount;
    json transition = json::array();
    for (int s = 0; s < mdp.num_states; ++s) {
        json per_state = json::array();
        for (int a = 0; a < mdp.num_actions; ++a) {
            json row = json::array();
            for (int next = 0; next < mdp.num_states; ++next) row.push_back(mdp.prob(s, a, next));
            per_state.push_back(std::move(row));
        }
        transition.push_back(std::move(per_state));
    }
    j["transition"] = std::move(transition);
    json init = json::array();
    for (int s = 0; s < mdp.num_states; ++s) init.push_back(mdp.initial_dist[s]);
    j["initial_dist"] = std::move(init);
    write_json(j, path);
}

TabularMdp load_mdp(const std::string& path) {
    const json j = read_json(path);
    TabularMdp mdp;
    mdp.num_states = field(j, "num_states", path).get<int>();
    mdp.num_actions = field(j, "num_actions", path).get<int>();
    mdp.discount = field(j, "discount", path).get<double>();
    const json& transition = field(j, "transition", path);
    if (static_cast<int>(transition.size()) != mdp.num_states)
        throw std::runtime_error(path + ": field 'transition' has wrong outer length");
    mdp.transition = Mat::Zero(static_cast<long>(mdp.num_states) * mdp.num_actions,
                               mdp.num_states);
    for (int s = 0; s < mdp.num_states; ++s) {
        if (static_cast<int>(transition[s].size()) != mdp.num_actions)
            throw std::runtime_error(path + ": field 'transition' has wrong action length");
        for (int a = 0; a < mdp.num_actions; ++a) {
            const json& row = transition[s][a];
            if (static_cast<int>(row.size()) != mdp.num_states)
                throw std::runtime_error(path + ": field 'transition' has wrong row length");
            for (int next = 0; next < mdp.num_states; ++next)
                mdp.transition(mdp.sa_index(s, a), next) = row[next].get<double>();
        }
    }
    const json& init = field(j, "initial_dist", path);
    if (static_cast<int>(init.size()) != mdp.num_states)
        throw std::runtime_error(path + ": field 'initial_dist' has wrong length");
    mdp.initial_dist = Vec(mdp.num_states);
    for (int s = 0; s < mdp.num_states; ++s) mdp.initial_dist[s] = init[s].get<double>();
    mdp.validate();
    return mdp;
}

void save_features(const FeatureMap& features, int num_states, int num_actions,
                   const std::string& path) {
    json j;
    j["dim"] = features.dim;
    j["num_states"] = num_states;
    j["num_actions"] = num_actions;
    json values = json::array();
    for (long row = 0; row < features.values.rows(); ++row) {
        json frow = json::array();
        for (int d = 0; d < features.dim; ++d) frow.push_back(features.values(row, d));
        values.push_back(std::move(frow));
    }
    j["values"] = std::move(values);
    write_json(j, path);
}

FeatureMap load_features(const std::string& path) {
    const json j = read_json(path);
    FeatureMap features;
    features.dim = field(j, "dim", path).get<int>();
    const int num_states = field(j, "num_states", path).get<int>();
    const int num_actions = field(j, "num_actions", path).get<int>();
    const json& values = field(j, "values", path);
    const long rows = static_cast<long>(num_states) * num_actions;
    if (static_cast<long>(values.size()) != rows)
        throw std::runtime_error(path + ": field 'values' has wrong length");
    features.values = Mat(rows, features.dim);
    for (long row = 0; row < rows; ++row) {
        if (static_cast<int>(values[row].size()) != features.dim)
            throw std::runtime_error(path + ": field 'values' has wrong row length");
        for (int d = 0; d < features.dim; ++d)
            features.values(row, d) = values[row][d].get<double>();
    }
    return features;
}

void save_demos(const DemonstrationSet& demos, const std::string& path) {
    json j;
    json trajectories = json::array();
    for (const auto& tau : demos.trajectories) {
        json steps = json::array();
        for (const auto& [s, a] : tau.steps) steps.push_back(json::array({s, a}));
        trajectories.push_back(std::move(steps));
    }
    j["trajectories"] = std::move(trajectories);
    write_json(j, path);
}

DemonstrationSet load_demos(const std::string& path) {
    const json j = read_json(path);
    const json& trajectories = field(j, "trajectories", path);
    if (trajectories.empty())
        throw std::runtime_error(path + ": field 'trajectories' must be nonempty");
    DemonstrationSet out;
    for (const auto& steps : trajectories) {
        Trajectory tau;
        if (steps.empty())
            throw std::runtime_error(path + ": field 'trajectories' contains an empty trajectory");
        for (const auto& step : steps) {
            if (!step.is_array() || step.size() != 2)
                throw std::runtime_error(path +
                                         ": field 'trajectories' steps must be [state, action]");
            tau.steps.emplace_back(step[0].get<int>(), step[1].get<int>());
        }
        out.trajectories.push_back(std::move(tau));
    }
    return out;
}

void save_labels(const std::vector<int>& labels, const std::string& path) {
    json j;
    j["labels"] = labels;
    write_json(j, path);
}

std::vector<int> load_labels(const std::string& path) {
    const json j = read_json(path);
    return field(j, "labels", path).get<std::vector<int>>();
}

void save_reward_set(const std::vector<RewardParams>& thetas, const std::string& path) {
    json j;
    json rows = json::array();
    for (const auto& theta : thetas) {
        json row = json::array();
        for (long d = 0; d < theta.theta.size(); ++d) row.push_back(theta.theta[d]);
        rows.push_back(std::move(row));
    }
    j["thetas"] = std::move(rows);
    write_json(j, path);
}

std::vector<RewardParams> load_reward_set(const std::string& path) {
    const json j = read_json(path);
    const json& rows = field(j, "thetas", path);
    std::vector<RewardParams> out;
    for (const auto& row : rows) {
        RewardParams theta;
        theta.theta = Vec(static_cast<long>(row.size()));
        for (long d = 0; d < theta.theta.size(); ++d) theta.theta[d] = row[d].get<double>();
        out.push_back(std::move(theta));
    }
    return out;
}

void save_model(const ClusterModel& model, const ResponsibilityMatrix& beta,
                const std::string& path) {
    json j;
    json clusters = json::array();
    for (int c = 0; c < model.size(); ++c) {
        json cluster;
        json theta = json::array();
        for (long d = 0; d < model.thetas[c].theta.size(); ++d)
            theta.push_back(model.thetas[c].theta[d]);
        cluster["theta"] = std::move(theta);
        cluster["psi"] = model.prior[c];
        clusters.push_back(std::move(cluster));
    }
    j["clusters"] = std::move(clusters);
    json rows = json::array();
    for (int i = 0; i < beta.num_demos(); ++i) {
        json row = json::array();
        for (int c = 0; c < beta.num_clusters(); ++c) row.push_back(beta.beta(i, c));
        rows.push_back(std::move(row));
    }
    j["beta"] = std::move(rows);
    write_json(j, path);
}

LoadedModel load_model(const std::string& path) {
    const json j = read_json(path);
    LoadedModel out;
    const json& clusters = field(j, "clusters", path);
    out.prior = Vec(static_cast<long>(clusters.size()));
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        const json& theta = field(clusters[c], "theta", path);
        RewardParams params;
        params.theta = Vec(static_cast<long>(theta.size()));
        for (long d = 0; d < params.theta.size(); ++d) params.theta[d] = theta[d].get<double>();
        out.thetas.push_back(std::move(params));
        out.prior[c] = field(clusters[c], "psi", path).get<double>();
    }
    const json& beta = field(j, "beta", path);
    const long n = static_cast<long>(beta.size());
    const long m = static_cast<long>(clusters.size());
    out.beta = Mat(n, m);
    for (long i = 0; i < n; ++i) {
        if (static_cast<long>(beta[i].size()) != m)
            throw std::runtime_error(path + ": field 'beta' has wrong row length");
        for (long c = 0; c < m; ++c) out.beta(i, c) = beta[i][c].get<double>();
    }
    return out;
}

void save_irl_trace(const IrlTrace& trace, const std::string& path) {
    auto out = open_out(path);
    out << "iter,loglik,grad_inf_norm,wall_ms\n";
    for (const auto& rec : trace.records)
        out << rec.iter << ',' << rec.log_likelihood << ',' << rec.grad_norm << ','
            << rec.wall_ms << '\n';
}

void save_em_trace(const std::vector<EmIterationRecord>& records, const std::string& path) {
    auto out = open_out(path);
    out << "iter,em_loglik,wall_ms";
    if (!records.empty()) {
        for (long j = 0; j < records.front().grad_norms.size(); ++j) out << ",grad_norm_" << j;
        for (long j = 0; j < records.front().psi.size(); ++j) out << ",psi_" << j;
    }
    out << '\n';
    for (const auto& rec : records) {
        out << rec.iter << ',' << rec.observed_loglik << ',' << rec.wall_ms;
        for (long j = 0; j < rec.grad_norms.size(); ++j) out << ',' << rec.grad_norms[j];
        for (long j = 0; j < rec.psi.size(); ++j) out << ',' << rec.psi[j];
        out << '\n';
    }
}

void save_crp_trace(const std::vector<CrpIterationRecord>& trace, const std::string& path) {
    auto out = open_out(path);
    out << "iter,num_clusters,total_loglik,wall_ms,masses...\n";
    for (const auto& rec : trace) {
        out << rec.iter << ',' << rec.num_clusters << ',' << rec.total_loglik << ','
            << rec.wall_ms;
        for (long j = 0; j < rec.masses.size(); ++j) out << ',' << rec.masses[j];
        out << '\n';
    }
}

namespace {
void write_snapshot_row(std::ofstream& out, int iter, int cluster, const Vec& theta) {
    out << iter << ',' << cluster;
    for (long d = 0; d < theta.size(); ++d) out << ',' << theta[d];
    out << '\n';
}
}  // namespace

void save_theta_snapshots(const std::vector<CrpIterationRecord>& trace,
                          const std::string& path) {
    auto out = open_out(path);
    out << "iter,cluster,theta...\n";
    for (const auto& rec : trace)
        for (std::size_t j = 0; j < rec.thetas.size(); ++j)
            write_snapshot_row(out, rec.iter, static_cast<int>(j), rec.thetas[j]);
}

void save_theta_snapshots(const IrlTrace& trace, const std::string& path) {
    auto out = open_out(path);
    out << "iter,cluster,theta...\n";
    for (const auto& rec : trace.records) write_snapshot_row(out, rec.iter, 0, rec.theta);
}

void save_theta_snapshots(const std::vector<IrlTrace>& cluster_traces, const std::string& path) {
    auto out = open_out(path);
    out << "iter,cluster,theta...\n";
    if (cluster_traces.empty()) return;
    const std::size_t iters = cluster_traces.front().records.size();
    for (std::size_t t = 0; t < iters; ++t)
        for (std::size_t j = 0; j < cluster_traces.size(); ++j)
            write_snapshot_row(out, cluster_traces[j].records[t].iter, static_cast<int>(j),
                               cluster_traces[j].records[t].theta);
}

std::vector<ThetaSnapshot> load_theta_snapshots(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<ThetaSnapshot> out;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        ThetaSnapshot snap;
        std::vector<double> values;
        int col = 0;
        while (std::getline(ss, tok, ',')) {
            if (col == 0)
                snap.iter = std::stoi(tok);
            else if (col == 1)
                snap.cluster = std::stoi(tok);
            else
                values.push_back(std::stod(tok));
            ++col;
        }
        snap.theta = Vec(static_cast<long>(values.size()));
        for (std::size_t d = 0; d < values.size(); ++d) snap.theta[d] = values[d];
        out.push_back(std::move(snap));
    }
    return out;
}

}  // namespace bcirl
