// metaemb: build and evaluate word meta-embeddings from pretrained sources.
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "metaemb/config.hpp"
#include "metaemb/errors.hpp"
#include "metaemb/pipeline.hpp"

namespace {

using metaemb::RunConfig;

// Flags shared by the pipeline commands. Only flags the user actually passed
// override values coming from --config.
struct CommonFlags {
  std::string config_path;
  std::vector<std::string> sources;
  std::vector<std::string> datasets;
  std::string format = "plain";
  std::vector<std::string> methods;
  std::string loss = "mse";
  std::size_t target = 0;
  bool concat_y = false;
  std::size_t rank = 200;
  std::size_t hidden = 200;
  double dropout = 0.2;
  std::size_t batch = 32;
  std::size_t epochs = 50;
  double lr = 0.05;
  double init_std = 1.0;
  bool init_scaled = false;
  std::uint64_t seed = 1;
  std::string out_dir;
  std::string refs;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f, bool with_methods,
                      bool with_datasets) {
  cmd->add_option("--config", f.config_path, "config file (key = value plus [source]/[method]/[dataset] blocks)");
  cmd->add_option("--sources", f.sources, "source embedding files, comma separated")
      ->delimiter(',');
  cmd->add_option("--format", f.format, "source file format")
      ->check(CLI::IsMember({"plain", "headered"}));
  if (with_datasets)
    cmd->add_option("--datasets", f.datasets, "similarity dataset files (word word score per line), comma separated")
        ->delimiter(',');
  if (with_methods) {
    cmd->add_option("--methods", f.methods,
                    "meta methods: conc,av,svd,1ton,caeme,daeme,aaeme,tae,tae+y,mte")
        ->delimiter(',');
    cmd->add_option("--loss", f.loss, "training loss")
        ->check(CLI::IsMember({"mse", "mae", "kl", "scp"}));
    cmd->add_option("--target", f.target, "target source index (tae/tae+y/mte)");
    cmd->add_flag("--concat-y", f.concat_y, "append the target vector (turns tae into tae+y)");
    cmd->add_option("--rank", f.rank, "svd rank");
  }
  cmd->add_option("--hidden", f.hidden, "hidden layer width")->capture_default_str();
  cmd->add_option("--dropout", f.dropout, "hidden dropout rate")->capture_default_str();
  cmd->add_option("--batch", f.batch, "minibatch size")->capture_default_str();
  cmd->add_option("--epochs", f.epochs, "training epochs")->capture_default_str();
  cmd->add_option("--lr", f.lr, "learning rate")->capture_default_str();
  cmd->add_option("--init-std", f.init_std, "weight init stddev")->capture_default_str();
  cmd->add_flag("--init-scaled", f.init_scaled, "init stddev 1/sqrt(fan_in) instead of --init-std");
  cmd->add_option("--seed", f.seed, "global seed")->capture_default_str();
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_option("--refs", f.refs, "published reference score file");
}

// Config file first, flags the user passed second.
RunConfig merge_config(const CLI::App* cmd, const CommonFlags& f) {
  RunConfig cfg;
  if (!f.config_path.empty()) cfg = metaemb::parse_config_file(f.config_path);

  auto passed = [&](const std::string& name) {
    return cmd->count(name) > 0;
  };

  if (passed("--sources")) {
    cfg.sources.clear();
    for (const auto& path : f.sources) {
      metaemb::SourceSpec spec;
      spec.path = path;
      spec.name = metaemb::stem_of(path);
      cfg.sources.push_back(std::move(spec));
    }
  }
  if (passed("--format"))
    for (auto& src : cfg.sources)
      src.format = f.format == "headered" ? metaemb::TableFormat::Headered
                                          : metaemb::TableFormat::Plain;
  if (cmd->get_option_no_throw("--datasets") && passed("--datasets")) {
    cfg.datasets.clear();
    for (const auto& path : f.datasets) {
      metaemb::DatasetSpec spec;
      spec.path = path;
      spec.name = metaemb::stem_of(path);
      cfg.datasets.push_back(std::move(spec));
    }
  }
  if (cmd->get_option_no_throw("--methods") && passed("--methods")) {
    cfg.methods.clear();
    for (const auto& name : f.methods) {
      metaemb::MethodSpec spec;
      spec.method = metaemb::parse_method(name);
      if (spec.method == metaemb::MetaMethod::Tae && f.concat_y)
        spec.method = metaemb::MetaMethod::TaePlusY;
      spec.loss = metaemb::parse_loss(f.loss);
      spec.target = f.target;
      spec.rank = passed("--rank") ? f.rank : 0;
      cfg.methods.push_back(spec);
    }
  }
  if (passed("--hidden")) cfg.hidden = f.hidden;
  if (passed("--dropout")) cfg.dropout = f.dropout;
  if (cmd->get_option_no_throw("--rank") && passed("--rank")) cfg.svd_rank = f.rank;
  if (passed("--batch")) cfg.train.batch_size = f.batch;
  if (passed("--epochs")) cfg.train.epochs = f.epochs;
  if (passed("--lr")) cfg.train.learning_rate = f.lr;
  if (passed("--init-std")) cfg.train.init_std = f.init_std;
  if (passed("--init-scaled")) cfg.train.init_scaled = true;
  if (passed("--seed")) cfg.seed = f.seed;
  if (passed("--out")) cfg.out_dir = f.out_dir;
  if (passed("--refs")) cfg.refs_path = f.refs;
  cfg.train.shuffle_seed = cfg.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"word meta-embedding trainer and evaluator"};
  app.require_subcommand(1);

  CommonFlags align_f, train_f, eval_f, repro_f, export_f;
  std::string export_model, export_dest;
  std::uint64_t grad_seed = 1;

  CLI::App* cmd_align = app.add_subcommand(
      "align", "intersect source vocabularies, l2-normalize, write the aligned artifact");
  add_common_flags(cmd_align, align_f, false, false);

  CLI::App* cmd_train = app.add_subcommand(
      "train", "build or train meta-embedding methods over an aligned artifact");
  add_common_flags(cmd_train, train_f, true, false);

  CLI::App* cmd_eval = app.add_subcommand(
      "eval", "score every built meta table against similarity datasets");
  add_common_flags(cmd_eval, eval_f, false, true);

  CLI::App* cmd_repro = app.add_subcommand(
      "reproduce", "full grid: align, build every method under every loss, evaluate, compare to published scores");
  add_common_flags(cmd_repro, repro_f, false, true);
  cmd_repro->add_option("--rank", repro_f.rank, "svd rank");

  CLI::App* cmd_export = app.add_subcommand(
      "export", "rebuild a meta table from a saved model checkpoint");
  add_common_flags(cmd_export, export_f, false, false);
  cmd_export->add_option("--model", export_model, "model checkpoint path")->required();
  cmd_export->add_option("--to", export_dest, "destination .vec path")->required();

  CLI::App* cmd_grad = app.add_subcommand(
      "grad-check", "verify analytic gradients against finite differences");
  cmd_grad->add_option("--seed", grad_seed, "base seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints the error or the help text
    return code == 0 ? metaemb::kExitOk : metaemb::kExitUsage;
  }

  try {
    if (cmd_align->parsed())
      return metaemb::run_align(merge_config(cmd_align, align_f), std::cout);
    if (cmd_train->parsed())
      return metaemb::run_train(merge_config(cmd_train, train_f), std::cout);
    if (cmd_eval->parsed())
      return metaemb::run_eval(merge_config(cmd_eval, eval_f), std::cout);
    if (cmd_repro->parsed())
      return metaemb::run_reproduce(merge_config(cmd_repro, repro_f), std::cout);
    if (cmd_export->parsed())
      return metaemb::run_export(merge_config(cmd_export, export_f),
                                 export_model, export_dest, std::cout);
    if (cmd_grad->parsed())
      return metaemb::run_grad_check(grad_seed, std::cout);
  } catch (const metaemb::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return metaemb::kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return metaemb::kExitData;
  }
  return metaemb::kExitUsage;
}
