#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rsma/datagen.hpp"

namespace rsma {

namespace {

using nlohmann::json;

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

cplx complex_from(const json& j) {
    if (!j.is_array() || j.size() != 2) {
        throw std::runtime_error("complex value must be a [re, im] pair");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

json cvector_json(const CVector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(complex_json(v(i)));
    }
    return out;
}

json cmatrix_json(const CMatrix& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(complex_json(m(r, c)));
        }
        out.push_back(std::move(row));
    }
    return out;
}

json rvector_json(const RVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

CVector cvector_from(const json& j) {
    CVector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = complex_from(j[i]);
    }
    return v;
}

CMatrix cmatrix_from(const json& j) {
    if (!j.is_array() || j.empty()) {
        throw std::runtime_error("matrix must be a non-empty array of rows");
    }
    const std::size_t cols = j[0].size();
    CMatrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (j[r].size() != cols) {
            throw std::runtime_error("matrix rows differ in length");
        }
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = complex_from(j[r][c]);
        }
    }
    return m;
}

RVector rvector_from(const json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const RVector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json config_json(const SystemConfig& c) {
    return {{"num_users", c.num_users},
            {"num_antennas", c.num_antennas},
            {"p_max_dbm", c.p_max_dbm},
            {"p_c_dbm", c.p_c_dbm},
            {"p0_upper", c.p0_upper},
            {"channel_variance", c.channel_variance},
            {"noise_variance", c.noise_variance},
            {"seed", c.seed}};
}

SystemConfig config_from(const json& j) {
    SystemConfig c;
    c.num_users = j.value("num_users", c.num_users);
    c.num_antennas = j.value("num_antennas", c.num_antennas);
    c.p_max_dbm = j.value("p_max_dbm", c.p_max_dbm);
    c.p_c_dbm = j.value("p_c_dbm", c.p_c_dbm);
    c.p0_upper = j.value("p0_upper", c.p0_upper);
    c.channel_variance = j.value("channel_variance", c.channel_variance);
    c.noise_variance = j.value("noise_variance", c.noise_variance);
    c.seed = j.value("seed", c.seed);
    for (const auto& item : j.items()) {
        static const char* known[] = {"num_users",        "num_antennas",   "p_max_dbm", "p_c_dbm", "p0_upper",
                                      "channel_variance", "noise_variance", "seed"};
        if (std::find(std::begin(known), std::end(known), item.key()) == std::end(known)) {
            throw std::runtime_error("unknown config field '" + item.key() + "'");
        }
    }
    c.validate();
    return c;
}

json labeling_json(const LabelSettings& l) {
    return {{"restarts", l.restarts},
            {"max_iters", l.oracle.max_iters},
            {"tol", l.oracle.tol},
            {"inner_iters", l.oracle.inner_iters},
            {"inner_step", l.oracle.inner_step}};
}

LabelSettings labeling_from(const json& j, int num_users) {
    LabelSettings l = LabelSettings::defaults(num_users);
    l.restarts = j.at("restarts").get<int>();
    l.oracle.max_iters = j.at("max_iters").get<int>();
    l.oracle.tol = j.at("tol").get<double>();
    l.oracle.inner_iters = j.at("inner_iters").get<int>();
    l.oracle.inner_step = j.at("inner_step").get<double>();
    return l;
}

json record_json(std::size_t index, const DatasetRecord& rec) {
    const ProblemInstance& inst = rec.instance;
    json j;
    j["index"] = index;
    j["instance"] = {{"channels", cmatrix_json(inst.channels)},
                     {"weights", rvector_json(inst.weights)},
                     {"noise_var", rvector_json(inst.noise_var)},
                     {"p0", inst.p0},
                     {"power_budget", inst.power_budget},
                     {"ref_user", inst.ref_user}};
    j["wsr_star"] = rec.wsr_star ? json(*rec.wsr_star) : json(nullptr);
    j["oracle"] = {{"iterations_used", rec.oracle.iterations_used},
                   {"converged", rec.oracle.converged},
                   {"solver_seed", rec.oracle.solver_seed},
                   {"restarts", rec.oracle.restarts}};
    if (rec.solution) {
        j["solution"] = {{"v0", cvector_json(rec.solution->beams.v0)},
                         {"v", cmatrix_json(rec.solution->beams.v)},
                         {"rc", rvector_json(rec.solution->rc.rc)}};
    } else {
        j["solution"] = nullptr;
    }
    return j;
}

DatasetRecord record_from(const json& j, std::size_t expected_index) {
    if (j.at("index").get<std::size_t>() != expected_index) {
        throw std::runtime_error("record index " + j.at("index").dump() + " out of sequence, expected " +
                                 std::to_string(expected_index));
    }
    DatasetRecord rec;
    const json& ji = j.at("instance");
    ProblemInstance inst;
    inst.channels = cmatrix_from(ji.at("channels"));
    inst.weights = rvector_from(ji.at("weights"));
    inst.noise_var = rvector_from(ji.at("noise_var"));
    inst.p0 = ji.at("p0").get<double>();
    inst.power_budget = ji.at("power_budget").get<double>();
    inst.ref_user = ji.at("ref_user").get<int>();
    validate_instance(inst);
    rec.instance = std::move(inst);

    if (!j.at("wsr_star").is_null()) {
        rec.wsr_star = j.at("wsr_star").get<double>();
    }
    const json& jo = j.at("oracle");
    rec.oracle.iterations_used = jo.at("iterations_used").get<int>();
    rec.oracle.converged = jo.at("converged").get<bool>();
    rec.oracle.solver_seed = jo.at("solver_seed").get<std::uint64_t>();
    rec.oracle.restarts = jo.at("restarts").get<int>();

    const json& js = j.at("solution");
    if (!js.is_null()) {
        Iterate sol;
        sol.beams.v0 = cvector_from(js.at("v0"));
        sol.beams.v = cmatrix_from(js.at("v"));
        sol.rc.rc = rvector_from(js.at("rc"));
        check_dimensions(rec.instance, sol.beams);
        if (sol.rc.rc.size() != rec.instance.num_users()) {
            throw std::runtime_error("solution rc length differs from number of users");
        }
        rec.solution = std::move(sol);
    }
    return rec;
}

} // namespace

std::string config_to_json(const SystemConfig& config) { return config_json(config).dump(2); }

SystemConfig config_from_json(const std::string& text) {
    try {
        return config_from(json::parse(text));
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("config: ") + e.what());
    }
}

SystemConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return config_from_json(buffer.str());
}

void write_dataset(std::ostream& os, const Dataset& dataset) {
    json header;
    header["format"] = kDatasetFormat;
    header["version"] = kDatasetVersion;
    header["seed"] = dataset.seed;
    header["count"] = dataset.records.size();
    header["scenario"] = dataset.scenario;
    header["config"] = config_json(dataset.config);
    header["labeling"] = dataset.labeling ? labeling_json(*dataset.labeling) : json(nullptr);
    os << header.dump() << '\n';
    for (std::size_t i = 0; i < dataset.records.size(); ++i) {
        os << record_json(i, dataset.records[i]).dump() << '\n';
    }
}

void write_dataset(const std::string& path, const Dataset& dataset) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    write_dataset(out, dataset);
    if (!out) {
        throw std::runtime_error("write to '" + path + "' failed");
    }
}

Dataset read_dataset(std::istream& is) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(is, line)) {
        throw DatasetError(1, "missing header");
    }
    Dataset ds;
    std::size_t count = 0;
    try {
        const json header = json::parse(line);
        if (header.at("format").get<std::string>() != kDatasetFormat) {
            throw DatasetError(1, "not an rsma dataset");
        }
        const std::string version = header.at("version").get<std::string>();
        if (version != kDatasetVersion) {
            throw DatasetError(1, "unsupported dataset version '" + version + "'");
        }
        ds.seed = header.at("seed").get<std::uint64_t>();
        count = header.at("count").get<std::size_t>();
        ds.scenario = header.at("scenario").get<std::string>();
        ds.config = config_from(header.at("config"));
        if (!header.at("labeling").is_null()) {
            ds.labeling = labeling_from(header.at("labeling"), ds.config.num_users);
        }
    } catch (const DatasetError&) {
        throw;
    } catch (const std::exception& e) {
        throw DatasetError(1, std::string("malformed header: ") + e.what());
    }

    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            ds.records.push_back(record_from(json::parse(line), ds.records.size()));
        } catch (const std::exception& e) {
            throw DatasetError(line_no, std::string("malformed record: ") + e.what());
        }
    }
    if (ds.records.size() != count) {
        throw DatasetError(line_no + 1, "truncated or padded file: header declares " + std::to_string(count) +
                                            " records, found " + std::to_string(ds.records.size()));
    }
    return ds;
}

Dataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open dataset '" + path + "'");
    }
    return read_dataset(in);
}

} // namespace rsma
