#include "taxaudit/report.hpp"

#include <fmt/format.h>

#include "taxaudit/corpus.hpp"
#include "taxaudit/error.hpp"

namespace taxaudit {

namespace {

std::string md_cell(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '|') out += "\\|";
        else out.push_back(c);
    }
    return out;
}

std::string category_of(const AnalysisBundle& b, int c) {
    return c >= 0 && static_cast<std::size_t>(c) < b.categories.size() ? b.categories[static_cast<std::size_t>(c)]
                                                                         : std::string(kUnmatched);
}

std::string pc_label(std::size_t pc) { return fmt::format("PC{}", pc); }

void add_row(std::string& out, const std::vector<std::string>& cells) {
    out += "|";
    for (const auto& c : cells) out += " " + c + " |";
    out += "\n";
}

void add_rule(std::string& out, const std::vector<bool>& right_aligned) {
    out += "|";
    for (bool r : right_aligned) out += r ? " ---: |" : " --- |";
    out += "\n";
}

std::string csv_line(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += csv_escape(fields[i]);
    }
    return out + "\n";
}

}  // namespace

std::vector<std::size_t> AnalysisBundle::kept_pcs() const {
    std::vector<std::size_t> out;
    for (const auto& c : components)
        if (c.kept) out.push_back(c.pc);
    return out;
}

std::string format_percent(double fraction) {
    auto s = fmt::format("{:.1f}", fraction * 100.0);
    return s == "-0.0" ? "0.0" : s;
}

std::string format_mean(double value) {
    auto s = fmt::format("{:.2f}", value);
    return s == "-0.00" ? "0.00" : s;
}

void check_bundle(const AnalysisBundle& b) {
    auto fail = [](const std::string& what) { throw Error("report", "inconsistent-bundle", what); };
    if (b.table.counts.rows() != static_cast<Eigen::Index>(b.categories.size())) fail("table rows != categories");
    if (b.table.n_clusters() != b.k) fail("table columns != k");
    if (b.table.total() != static_cast<long>(b.n)) fail("table total != n");
    if (b.elements.size() != b.n) fail("element records != n");
    if (b.mapping.cluster_to_category.size() != static_cast<std::size_t>(b.k)) fail("mapping size != k");
    auto acc = accuracy(b.table, b.mapping);
    if (acc.matched != b.accuracy.matched || acc.total != b.accuracy.total || acc.value != b.accuracy.value) {
        fail("accuracy does not match table and mapping");
    }
    if (static_cast<long>(b.mismatches.size()) != acc.total - acc.matched) fail("mismatch count != n - matched");
    if (b.cluster_means.rows() != b.k || b.cluster_means.cols() != static_cast<Eigen::Index>(b.kept_pcs().size())) {
        fail("cluster means shape");
    }
    if (b.cluster_sizes.size() != static_cast<std::size_t>(b.k)) fail("cluster sizes != k");
}

std::string render_markdown(const AnalysisBundle& b) {
    check_bundle(b);
    const auto kept = b.kept_pcs();
    std::string out;
    out += fmt::format("# Taxonomy audit: {}\n\n", b.corpus_name);
    out += fmt::format("{} elements, {} categories, {} clusters. Embeddings: {} (d = {}).\n\n", b.n,
                       b.categories.size(), b.k, b.provider_tag, b.dim);

    // Table 2 layout
    out += "## Table 2. PC cluster means\n\n";
    {
        std::vector<std::string> head{"Cluster", "Matched category", "Size"};
        std::vector<bool> align{true, false, true};
        for (auto pc : kept) {
            head.push_back(pc_label(pc));
            align.push_back(true);
        }
        add_row(out, head);
        add_rule(out, align);
        for (int j = 0; j < b.k; ++j) {
            std::vector<std::string> row{std::to_string(j + 1),
                                         md_cell(category_of(b, b.mapping.cluster_to_category[static_cast<std::size_t>(j)])),
                                         std::to_string(b.cluster_sizes[static_cast<std::size_t>(j)])};
            for (Eigen::Index c = 0; c < b.cluster_means.cols(); ++c) row.push_back(format_mean(b.cluster_means(j, c)));
            add_row(out, row);
        }
        out += fmt::format("\nScores {}.\n\n", b.standardized ? "standardized to unit standard deviation"
                                                              : "are unstandardized principal component scores");
    }

    // Table 3 layout
    out += "## Table 3. Classification results\n\n";
    {
        std::vector<std::string> head{"Category", "n"};
        std::vector<bool> align{false, true};
        for (int j = 0; j < b.k; ++j) {
            head.push_back(std::to_string(j + 1));
            align.push_back(true);
        }
        add_row(out, head);
        add_rule(out, align);
        auto sums = b.table.row_sums();
        for (int c = 0; c < b.table.n_categories(); ++c) {
            std::vector<std::string> row{md_cell(b.categories[static_cast<std::size_t>(c)]),
                                         std::to_string(sums[static_cast<std::size_t>(c)])};
            for (int j = 0; j < b.k; ++j) row.push_back(std::to_string(b.table.counts(c, j)));
            add_row(out, row);
        }
        out += fmt::format("\naccuracy: {}% ({}/{})\n\n", format_percent(b.accuracy.value), b.accuracy.matched,
                           b.accuracy.total);
    }

    // Table 4: cluster alignment
    out += "## Table 4. Cluster alignment\n\n";
    {
        add_row(out, {"Cluster", "Matched category", "Size", "Agreeing", "Agreement %"});
        add_rule(out, {true, false, true, true, true});
        for (int j = 0; j < b.k; ++j) {
            const int c = b.mapping.cluster_to_category[static_cast<std::size_t>(j)];
            const long size = b.cluster_sizes[static_cast<std::size_t>(j)];
            const long agree = c >= 0 ? b.table.counts(c, j) : 0;
            add_row(out, {std::to_string(j + 1), md_cell(category_of(b, c)), std::to_string(size), std::to_string(agree),
                          size > 0 ? format_percent(static_cast<double>(agree) / static_cast<double>(size)) : "0.0"});
        }
        out += "\n";
    }

    // Table 5 layout
    out += "## Table 5. Classification errors\n\n";
    if (b.mismatches.empty()) {
        out += "none\n\n";
    } else {
        add_row(out, {"Element", "Category", "Mismatch"});
        add_rule(out, {false, false, false});
        for (const auto& m : b.mismatches) add_row(out, {md_cell(m.id), md_cell(m.nominal), md_cell(m.mapped)});
        out += fmt::format("\n{} mismatches.\n\n", b.mismatches.size());
    }

    out += "## Components\n\n";
    add_row(out, {"Component", "Eigenvalue", "Variance %", "Eta squared", "Kept"});
    add_rule(out, {false, true, true, true, false});
    for (const auto& c : b.components) {
        add_row(out, {pc_label(c.pc), fmt::format("{:.4f}", c.eigenvalue), format_percent(c.share),
                      fmt::format("{:.3f}", c.eta_squared), c.kept ? "yes" : "no"});
    }
    out += fmt::format("\nk-means: inertia {:.6f}, {} iterations, best of {} restarts (restart {}){}.\n\n", b.inertia,
                       b.iterations, b.restarts, b.best_restart, b.converged ? "" : ", not converged");

    out += "## Configuration\n\n";
    add_row(out, {"Key", "Value"});
    add_rule(out, {false, false});
    for (const auto& [key, value] : b.config) add_row(out, {md_cell(key), md_cell(value)});
    out += fmt::format("\ntaxaudit {}\n", b.tool_version);
    return out;
}

nlohmann::ordered_json bundle_to_json(const AnalysisBundle& b) {
    check_bundle(b);
    using oj = nlohmann::ordered_json;
    oj j;
    j["tool_version"] = b.tool_version;
    j["corpus"] = oj{{"name", b.corpus_name}, {"n", b.n}, {"categories", b.categories}};
    j["embedding"] = oj{{"provider", b.provider_tag}, {"dim", b.dim}};

    oj comps = oj::array();
    for (const auto& c : b.components) {
        comps.push_back(oj{{"pc", c.pc}, {"eigenvalue", c.eigenvalue}, {"share", c.share},
                           {"eta_squared", c.eta_squared}, {"kept", c.kept}});
    }
    j["pca"] = oj{{"standardized", b.standardized}, {"components", comps}};

    j["kmeans"] = oj{{"k", b.k},
                     {"restarts", b.restarts},
                     {"best_restart", b.best_restart},
                     {"iterations", b.iterations},
                     {"converged", b.converged},
                     {"inertia", b.inertia}};

    oj counts = oj::array();
    for (int c = 0; c < b.table.n_categories(); ++c) {
        oj row = oj::array();
        for (int jj = 0; jj < b.table.n_clusters(); ++jj) row.push_back(b.table.counts(c, jj));
        counts.push_back(row);
    }
    j["contingency"] = oj{{"categories", b.table.categories}, {"counts", counts}};

    oj mapping = oj::array();
    for (std::size_t jj = 0; jj < b.mapping.cluster_to_category.size(); ++jj) {
        const int c = b.mapping.cluster_to_category[jj];
        mapping.push_back(oj{{"cluster", jj + 1}, {"category_index", c}, {"category", category_of(b, c)}});
    }
    j["alignment"] = oj{{"mapping", mapping},
                        {"matched", b.accuracy.matched},
                        {"total", b.accuracy.total},
                        {"accuracy", b.accuracy.value}};

    oj mism = oj::array();
    for (const auto& m : b.mismatches) mism.push_back(oj{{"id", m.id}, {"category", m.nominal}, {"mismatch", m.mapped}});
    j["mismatches"] = mism;

    oj means = oj::array();
    for (int jj = 0; jj < b.k; ++jj) {
        oj row = oj::array();
        for (Eigen::Index c = 0; c < b.cluster_means.cols(); ++c) row.push_back(b.cluster_means(jj, c));
        means.push_back(oj{{"cluster", jj + 1}, {"size", b.cluster_sizes[static_cast<std::size_t>(jj)]}, {"means", row}});
    }
    oj pcs = oj::array();
    for (auto pc : b.kept_pcs()) pcs.push_back(pc_label(pc));
    j["cluster_means"] = oj{{"components", pcs}, {"rows", means}};

    oj elems = oj::array();
    for (const auto& e : b.elements) {
        elems.push_back(oj{{"id", e.id}, {"category", e.category}, {"cluster", e.cluster + 1}, {"scores", e.scores}});
    }
    j["elements"] = elems;

    oj config = oj::object();
    for (const auto& [key, value] : b.config) config[key] = value;
    j["config"] = config;
    return j;
}

std::string render_json(const AnalysisBundle& b) { return bundle_to_json(b).dump(2) + "\n"; }

AnalysisBundle bundle_from_json(const nlohmann::ordered_json& j) {
    try {
        AnalysisBundle b;
        b.tool_version = j.at("tool_version").get<std::string>();
        b.corpus_name = j.at("corpus").at("name").get<std::string>();
        b.n = j.at("corpus").at("n").get<std::size_t>();
        b.categories = j.at("corpus").at("categories").get<std::vector<std::string>>();
        b.provider_tag = j.at("embedding").at("provider").get<std::string>();
        b.dim = j.at("embedding").at("dim").get<std::size_t>();
        b.standardized = j.at("pca").at("standardized").get<bool>();
        for (const auto& c : j.at("pca").at("components")) {
            b.components.push_back({c.at("pc").get<std::size_t>(), c.at("eigenvalue").get<double>(),
                                    c.at("share").get<double>(), c.at("eta_squared").get<double>(),
                                    c.at("kept").get<bool>()});
        }
        const auto& km = j.at("kmeans");
        b.k = km.at("k").get<int>();
        b.restarts = km.at("restarts").get<int>();
        b.best_restart = km.at("best_restart").get<int>();
        b.iterations = km.at("iterations").get<int>();
        b.converged = km.at("converged").get<bool>();
        b.inertia = km.at("inertia").get<double>();

        const auto& ct = j.at("contingency");
        b.table.categories = ct.at("categories").get<std::vector<std::string>>();
        const auto& counts = ct.at("counts");
        b.table.counts = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(counts.size()), b.k);
        for (std::size_t c = 0; c < counts.size(); ++c) {
            if (counts[c].size() != static_cast<std::size_t>(b.k)) throw Error("report", "bad-bundle", "counts row width");
            for (int jj = 0; jj < b.k; ++jj) b.table.counts(static_cast<Eigen::Index>(c), jj) = counts[c][static_cast<std::size_t>(jj)].get<int>();
        }

        const auto& al = j.at("alignment");
        for (const auto& m : al.at("mapping")) b.mapping.cluster_to_category.push_back(m.at("category_index").get<int>());
        b.mapping.matched = al.at("matched").get<long>();
        b.accuracy.matched = al.at("matched").get<long>();
        b.accuracy.total = al.at("total").get<long>();
        b.accuracy.value = al.at("accuracy").get<double>();

        for (const auto& m : j.at("mismatches")) {
            b.mismatches.push_back({m.at("id").get<std::string>(), m.at("category").get<std::string>(),
                                    m.at("mismatch").get<std::string>()});
        }

        const auto& rows = j.at("cluster_means").at("rows");
        const auto width = j.at("cluster_means").at("components").size();
        b.cluster_means.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            b.cluster_sizes.push_back(rows[r].at("size").get<long>());
            const auto& means = rows[r].at("means");
            if (means.size() != width) throw Error("report", "bad-bundle", "cluster means row width");
            for (std::size_t c = 0; c < width; ++c) {
                b.cluster_means(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = means[c].get<double>();
            }
        }

        for (const auto& e : j.at("elements")) {
            b.elements.push_back({e.at("id").get<std::string>(), e.at("category").get<std::string>(),
                                  e.at("cluster").get<int>() - 1, e.at("scores").get<std::vector<double>>()});
        }
        for (const auto& [key, value] : j.at("config").items()) b.config.emplace_back(key, value.get<std::string>());
        check_bundle(b);
        return b;
    } catch (const nlohmann::json::exception& ex) {
        throw Error("report", "bad-bundle", ex.what());
    }
}

std::map<std::string, std::string> render_csv_set(const AnalysisBundle& b) {
    check_bundle(b);
    const auto kept = b.kept_pcs();
    std::map<std::string, std::string> out;

    std::string t2;
    {
        std::vector<std::string> head{"cluster", "category", "size"};
        for (auto pc : kept) head.push_back(pc_label(pc));
        t2 += csv_line(head);
        for (int j = 0; j < b.k; ++j) {
            std::vector<std::string> row{std::to_string(j + 1),
                                         category_of(b, b.mapping.cluster_to_category[static_cast<std::size_t>(j)]),
                                         std::to_string(b.cluster_sizes[static_cast<std::size_t>(j)])};
            for (Eigen::Index c = 0; c < b.cluster_means.cols(); ++c) row.push_back(format_mean(b.cluster_means(j, c)));
            t2 += csv_line(row);
        }
    }
    out["table2.csv"] = t2;

    std::string t3;
    {
        std::vector<std::string> head{"category", "n"};
        for (int j = 0; j < b.k; ++j) head.push_back(fmt::format("cluster_{}", j + 1));
        t3 += csv_line(head);
        auto sums = b.table.row_sums();
        for (int c = 0; c < b.table.n_categories(); ++c) {
            std::vector<std::string> row{b.categories[static_cast<std::size_t>(c)], std::to_string(sums[static_cast<std::size_t>(c)])};
            for (int j = 0; j < b.k; ++j) row.push_back(std::to_string(b.table.counts(c, j)));
            t3 += csv_line(row);
        }
    }
    out["table3.csv"] = t3;

    std::string t4 = csv_line({"cluster", "category", "size", "agreeing"});
    for (int j = 0; j < b.k; ++j) {
        const int c = b.mapping.cluster_to_category[static_cast<std::size_t>(j)];
        t4 += csv_line({std::to_string(j + 1), category_of(b, c), std::to_string(b.cluster_sizes[static_cast<std::size_t>(j)]),
                        std::to_string(c >= 0 ? b.table.counts(c, j) : 0)});
    }
    out["table4.csv"] = t4;

    std::string t5 = csv_line({"id", "category", "mismatch"});
    for (const auto& m : b.mismatches) t5 += csv_line({m.id, m.nominal, m.mapped});
    out["table5.csv"] = t5;
    return out;
}

std::map<std::string, std::string> render(const AnalysisBundle& bundle, ReportFormat format) {
    switch (format) {
        case ReportFormat::Markdown: return {{"report.md", render_markdown(bundle)}};
        case ReportFormat::Json: return {{"report.json", render_json(bundle)}};
        case ReportFormat::CsvSet: return render_csv_set(bundle);
    }
    return {};
}

std::string scatter_data(const std::vector<ElementRecord>& elements, std::size_t n_components,
                         std::pair<std::size_t, std::size_t> components) {
    auto [a, b] = components;
    if (a < 1 || b < 1 || a > n_components || b > n_components) {
        throw Error("report", "component-out-of-range",
                    fmt::format("pair ({}, {}) with {} components", a, b, n_components));
    }
    std::string out = "id,x,y,cluster,category\n";
    for (const auto& e : elements) {
        if (e.scores.size() != n_components) throw Error("report", "score-width-mismatch", e.id);
        out += csv_line({e.id, fmt::format("{:.6f}", e.scores[a - 1]), fmt::format("{:.6f}", e.scores[b - 1]),
                         std::to_string(e.cluster + 1), e.category});
    }
    return out;
}

}  // namespace taxaudit
