#include "bmdp/cli.hpp"

#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <variant>

#include <CLI11.hpp>

#include "bmdp/factored.hpp"
#include "bmdp/harness.hpp"
#include "bmdp/io.hpp"
#include "bmdp/ivi.hpp"
#include "bmdp/mdp.hpp"
#include "bmdp/reduce.hpp"

namespace bmdp {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
    if (!out) throw std::runtime_error("write to " + path + " failed");
}

void cmd_solve(const std::string& path, double tol, std::ostream& out) {
    ParsedModel pm = parse_model(read_file(path));
    const ExplicitMdp* m = std::get_if<ExplicitMdp>(&pm);
    if (!m) throw std::invalid_argument("solve expects an mdp file");
    const VIResult r = value_iterate(*m, tol);
    out << "state value action\n";
    for (int s = 0; s < m->n_states; ++s)
        out << s << " " << format_real(r.values[s]) << " " << r.policy[s] << "\n";
}

void cmd_ivi(const std::string& path, double tol, std::ostream& out) {
    ParsedModel pm = parse_model(read_file(path));
    const Bmdp* b = std::get_if<Bmdp>(&pm);
    if (!b) throw std::invalid_argument("ivi expects a bmdp file");
    const BoundedValueResult r = ivi_bound_optimal(*b, tol);
    out << "state lower upper action\n";
    for (int s = 0; s < b->n_states; ++s)
        out << s << " " << format_real(r.lower[s]) << " " << format_real(r.upper[s]) << " "
            << r.pessimistic_policy[s] << "\n";
}

void cmd_expand(const std::string& path, const std::string& out_path) {
    ParsedModel pm = parse_model(read_file(path));
    const FactoredMdp* f = std::get_if<FactoredMdp>(&pm);
    if (!f) throw std::invalid_argument("expand expects an fmdp file");
    write_file(out_path, serialize_model(expand_to_explicit(*f)));
}

void cmd_reduce(const std::string& path, double epsilon, const std::string& out_path,
                const std::string& partition_path, const std::string& mode, std::ostream& out) {
    ParsedModel pm = parse_model(read_file(path));
    if (const ExplicitMdp* m = std::get_if<ExplicitMdp>(&pm)) {
        if (mode == "symbolic")
            throw std::invalid_argument("symbolic reduction requires a factored model");
        const ReduceResult r = reduce_model(*m, epsilon);
        write_file(out_path, serialize_model(induce_bmdp(*m, r.partition)));
        write_file(partition_path, serialize_partition(r.partition));
        out << "blocks " << r.partition.size() << "\n";
        return;
    }
    const FactoredMdp* f = std::get_if<FactoredMdp>(&pm);
    if (!f) throw std::invalid_argument("reduce expects an mdp or fmdp file");
    if (mode != "explicit") {
        try {
            SymbolicReduceResult r = symbolic_reduce(*f, epsilon);
            write_file(out_path, serialize_model(r.bmdp));
            write_file(partition_path, serialize_partition(r.blocks, f->variables));
            out << "blocks " << r.blocks.size() << "\n";
            return;
        } catch (const SymbolicBudgetError&) {
            if (mode == "symbolic" || f->n_vars() > kMaxExpandVars) throw;
        }
    }
    const ExplicitMdp m = expand_to_explicit(*f);
    const ReduceResult r = reduce_model(m, epsilon);
    write_file(out_path, serialize_model(induce_bmdp(m, r.partition)));
    write_file(partition_path, serialize_partition(r.partition));
    out << "blocks " << r.partition.size() << "\n";
}

void cmd_sweep(const std::string& path, const std::vector<double>& epsilons, std::ostream& out) {
    ParsedModel pm = parse_model(read_file(path));
    const FactoredMdp* f = std::get_if<FactoredMdp>(&pm);
    if (!f) throw std::invalid_argument("sweep expects an fmdp file");
    out << epsilon_sweep(*f, epsilons).to_csv();
}

int cmd_check(const std::string& path, const std::string& model_path, double epsilon,
              std::ostream& out) {
    ParsedModel pm = parse_model(read_file(path));
    const TextPartition* tp = std::get_if<TextPartition>(&pm);
    if (!tp) {
        out << "ok\n";
        return 0;
    }
    if (model_path.empty())
        throw std::invalid_argument("checking a partition requires --model");
    ParsedModel mm = parse_model(read_file(model_path));
    ExplicitMdp model;
    Partition part;
    if (const ExplicitMdp* m = std::get_if<ExplicitMdp>(&mm)) {
        if (tp->symbolic)
            throw std::invalid_argument("a formula partition requires a factored model");
        model = *m;
        part = bind_partition(*tp, model.n_states);
    } else if (const FactoredMdp* f = std::get_if<FactoredMdp>(&mm)) {
        model = expand_to_explicit(*f);
        part = tp->symbolic
                   ? partition_from_formulas(bind_formulas(*tp, f->variables), f->n_vars())
                   : bind_partition(*tp, model.n_states);
    } else {
        throw std::invalid_argument("--model must name an mdp or fmdp file");
    }
    const HomogeneityReport rep = verify_homogeneous(model, part, epsilon);
    if (rep.ok) {
        out << "ok\n";
        return 0;
    }
    for (const std::string& v : rep.violations) out << v << "\n";
    return 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"epsilon-homogeneous MDP reduction and interval value bounds"};
    app.name("bmdp");
    app.require_subcommand(1);

    std::string model_path;
    std::string out_path;
    std::string partition_path;
    std::string check_model_path;
    std::string mode = "auto";
    double tol = 1e-6;
    double epsilon = 0.0;
    double check_epsilon = 0.0;
    std::vector<double> epsilons;

    CLI::App* solve = app.add_subcommand("solve", "optimal values and policy of an mdp file");
    solve->add_option("model", model_path, "mdp file")->required();
    solve->add_option("--tol", tol, "value accuracy");

    CLI::App* ivi = app.add_subcommand("ivi", "value bounds and pessimistic policy of a bmdp");
    ivi->add_option("model", model_path, "bmdp file")->required();
    ivi->add_option("--tol", tol, "value accuracy");

    CLI::App* expand = app.add_subcommand("expand", "expand an fmdp to an explicit mdp");
    expand->add_option("model", model_path, "fmdp file")->required();
    expand->add_option("--out", out_path, "output mdp file")->required();

    CLI::App* reduce = app.add_subcommand("reduce", "reduce a model to a bounded-parameter mdp");
    reduce->add_option("model", model_path, "mdp or fmdp file")->required();
    reduce->add_option("--epsilon", epsilon, "homogeneity tolerance")->required();
    reduce->add_option("--out", out_path, "output bmdp file")->required();
    reduce->add_option("--partition", partition_path, "output partition file")->required();
    reduce->add_option("--mode", mode, "explicit or symbolic reduction")
        ->check(CLI::IsMember({"explicit", "symbolic"}));

    CLI::App* sweep = app.add_subcommand("sweep", "reduction quality across epsilon values");
    sweep->add_option("model", model_path, "fmdp file")->required();
    sweep->add_option("--epsilons", epsilons, "comma-separated epsilon list")
        ->required()
        ->delimiter(',');

    CLI::App* check = app.add_subcommand("check", "validate a model or partition file");
    check->add_option("file", model_path, "file in any supported format")->required();
    check->add_option("--model", check_model_path, "model a partition is checked against");
    check->add_option("--epsilon", check_epsilon, "homogeneity tolerance for partition checks");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (solve->parsed()) {
            cmd_solve(model_path, tol, out);
        } else if (ivi->parsed()) {
            cmd_ivi(model_path, tol, out);
        } else if (expand->parsed()) {
            cmd_expand(model_path, out_path);
        } else if (reduce->parsed()) {
            cmd_reduce(model_path, epsilon, out_path, partition_path, mode, out);
        } else if (sweep->parsed()) {
            cmd_sweep(model_path, epsilons, out);
        } else if (check->parsed()) {
            return cmd_check(model_path, check_model_path, check_epsilon, out);
        }
        return 0;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return e.kind() == ParseError::Kind::Syntax ? 2 : 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace bmdp
