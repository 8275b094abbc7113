#include "gaitnet/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "gaitnet/error.hpp"

using nlohmann::json;

namespace gaitnet::report {

namespace {

json fold_to_json(const EvalReport::Fold& fold) {
    return json{{"accuracy", fold.accuracy},
                {"diverged", fold.diverged},
                {"dog_id", fold.dog_id},
                {"f1", fold.f1},
                {"test_windows", fold.test_windows}};
}

}  // namespace

std::string to_json(const EvalReport& report) {
    json j{{"accuracy", report.accuracy},
           {"class_names", report.class_names},
           {"confusion", report.confusion},
           {"f1", report.f1},
           {"f1_micro", report.f1_micro},
           {"f1_weighted", report.f1_weighted},
           {"notes", report.notes},
           {"placement", report.placement},
           {"protocol", report.protocol},
           {"regime", report.regime},
           {"task", report.task},
           {"test_windows", report.test_windows},
           {"train_windows", report.train_windows}};
    json folds = json::array();
    for (const auto& f : report.folds) folds.push_back(fold_to_json(f));
    j["folds"] = folds;
    return j.dump(2) + "\n";
}

void write_json(const EvalReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("report: cannot write " + path);
    out << to_json(report);
    if (!out) throw InputError("report: write to " + path + " failed");
}

EvalReport from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("report: cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("report " + path + ": " + e.what());
    }
    try {
        EvalReport r;
        r.task = j.at("task").get<std::string>();
        r.placement = j.at("placement").get<std::string>();
        r.protocol = j.at("protocol").get<std::string>();
        r.regime = j.at("regime").get<std::string>();
        r.accuracy = j.at("accuracy").get<double>();
        r.f1 = j.at("f1").get<double>();
        r.f1_micro = j.value("f1_micro", 0.0);
        r.f1_weighted = j.value("f1_weighted", 0.0);
        r.class_names = j.at("class_names").get<std::vector<std::string>>();
        r.confusion = j.at("confusion").get<std::vector<std::vector<long>>>();
        r.test_windows = j.value("test_windows", 0L);
        r.train_windows = j.value("train_windows", 0L);
        if (j.contains("notes")) r.notes = j.at("notes").get<std::vector<std::string>>();
        if (j.contains("folds")) {
            for (const auto& jf : j.at("folds")) {
                EvalReport::Fold f;
                f.dog_id = jf.at("dog_id").get<std::string>();
                f.accuracy = jf.at("accuracy").get<double>();
                f.f1 = jf.at("f1").get<double>();
                f.test_windows = jf.value("test_windows", 0L);
                f.diverged = jf.value("diverged", false);
                r.folds.push_back(std::move(f));
            }
        }
        return r;
    } catch (const json::exception& e) {
        throw SchemaError("report " + path + ": " + e.what());
    }
}

namespace {

struct Row {
    const EvalReport* report;
    bool best = false;
};

// Task groups in first-appearance order; rows sorted for stable output.
std::vector<std::pair<std::string, std::vector<Row>>> group_reports(
    const std::vector<EvalReport>& reports) {
    std::vector<std::pair<std::string, std::vector<Row>>> groups;
    for (const auto& r : reports) {
        auto it = std::find_if(groups.begin(), groups.end(),
                               [&](const auto& g) { return g.first == r.task; });
        if (it == groups.end()) {
            groups.push_back({r.task, {}});
            it = groups.end() - 1;
        }
        it->second.push_back({&r, false});
    }
    for (auto& [task, rows] : groups) {
        std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
            const auto key = [](const Row& r) {
                return std::tie(r.report->placement, r.report->protocol, r.report->regime);
            };
            return key(a) < key(b);
        });
        auto best = std::max_element(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
            return a.report->accuracy < b.report->accuracy;
        });
        if (best != rows.end()) best->best = true;
    }
    return groups;
}

}  // namespace

std::string summary_table(const std::vector<EvalReport>& reports) {
    std::ostringstream out;
    char line[160];
    for (const auto& [task, rows] : group_reports(reports)) {
        out << "task: " << task << "\n";
        std::snprintf(line, sizeof(line), "  %-10s %-9s %-7s %-9s %-8s %s\n", "placement",
                      "protocol", "regime", "accuracy", "f1", "test_windows");
        out << line;
        for (const Row& row : rows) {
            const EvalReport& r = *row.report;
            std::snprintf(line, sizeof(line), "  %-10s %-9s %-7s %7.4f%s %8.4f %ld\n",
                          r.placement.c_str(), r.protocol.c_str(), r.regime.c_str(), r.accuracy,
                          row.best ? "*" : " ", r.f1, r.test_windows);
            out << line;
        }
        out << "\n";
    }
    return out.str();
}

std::string summary_json(const std::vector<EvalReport>& reports) {
    json tasks = json::array();
    for (const auto& [task, rows] : group_reports(reports)) {
        json jrows = json::array();
        for (const Row& row : rows) {
            const EvalReport& r = *row.report;
            jrows.push_back(json{{"accuracy", r.accuracy},
                                 {"best", row.best},
                                 {"f1", r.f1},
                                 {"placement", r.placement},
                                 {"protocol", r.protocol},
                                 {"regime", r.regime},
                                 {"test_windows", r.test_windows}});
        }
        tasks.push_back(json{{"rows", jrows}, {"task", task}});
    }
    return json{{"tasks", tasks}}.dump(2) + "\n";
}

}  // namespace gaitnet::report
