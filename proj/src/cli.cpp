#include "scr/cli.hpp"

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "scr/adversarial.hpp"
#include "scr/augment.hpp"
#include "scr/config.hpp"
#include "scr/dataset.hpp"
#include "scr/decoder.hpp"
#include "scr/errors.hpp"
#include "scr/extractor.hpp"
#include "scr/netpbm.hpp"
#include "scr/nn/serialize.hpp"
#include "scr/rasterizer.hpp"

namespace scr::cli {

namespace fs = std::filesystem;

namespace {

using Defaults = std::vector<std::pair<std::string, std::string>>;

struct Context {
  const RunConfig& cfg;
  std::ostream& out;
  std::ostream& err;

  std::uint64_t seed() const { return cfg.get_u64("seed"); }
  int workers() const {
    const long w = cfg.get_long("workers");
    if (w < 1) throw UsageError("cli: workers must be >= 1");
    return static_cast<int>(w);
  }
  Profile profile() const { return parse_profile(cfg.get("profile")); }
  std::string path_or(const std::string& key, const std::string& fallback) const {
    const auto& v = cfg.get(key);
    return v.empty() ? fallback : v;
  }
};

struct Command {
  std::string name;
  std::string help;
  Defaults defaults;
  std::function<void(const Context&)> body;
};

Defaults with_augmentation(Defaults d) {
  for (auto& kv : augment::to_settings(augment::AugmentationConfig{})) d.push_back(kv);
  return d;
}

augment::AugmentationConfig augmentation_from(const RunConfig& cfg) {
  augment::AugmentationConfig aug;
  for (const auto& [k, v] : cfg.values()) augment::apply_setting(aug, k, v);
  aug.validate();
  return aug;
}

std::string read_text(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  return dataset::read_file(path);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text)) throw std::runtime_error("cli: cannot write " + path.string());
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

fs::path digest_path(const fs::path& weights) { return fs::path(weights.string() + ".digest"); }

void save_model(const Context& ctx, const fs::path& path, const nn::Model& model) {
  nn::save_weights(path, model.net, model.weights);
  write_text(digest_path(path),
             "config_digest = " + ctx.cfg.digest() + "\nweights_fnv = " + hex(nn::checksum(model.weights)) + "\n");
  ctx.out << "wrote " << path.string() << '\n';
}

nn::Model load_model(const Context& ctx, const std::string& module, const fs::path& path, nn::Network net) {
  if (!fs::exists(path)) throw std::runtime_error(module + ": weights file not found: " + path.string());
  nn::Model model{std::move(net), {}};
  model.weights = nn::load_weights(path, model.net);
  if (fs::exists(digest_path(path))) {
    RunConfig stored({{"config_digest", ""}, {"weights_fnv", ""}});
    stored.apply_file(dataset::read_file(digest_path(path).string()), digest_path(path).string());
    if (stored.get("weights_fnv") != hex(nn::checksum(model.weights)))
      ctx.err << "warning: " << module << ": " << path.string() << " does not match its recorded digest\n";
  } else {
    ctx.err << "warning: " << module << ": no digest stored beside " << path.string() << '\n';
  }
  return model;
}

// ---------------------------------------------------------------------------

void render(const Context& ctx) {
  std::istringstream in(read_text(ctx.cfg.get("input")));
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw DomainError("render: not a number: '" + token + "'");
    }
  }
  const StepCount steps(static_cast<int>(ctx.cfg.get_long("steps")));
  GrayImage img;
  if (values.size() == kParamsPerStroke) {
    img = rasterize_stroke(WQBCParams::from_span(std::span<const double>(values)), steps);
  } else if (values.size() == kGlyphParams) {
    img = rasterize_glyph(stroke_set_from_span(std::span<const double>(values)), steps);
  } else {
    throw DomainError("render: expected 9 or 36 values, got " + std::to_string(values.size()));
  }
  netpbm::write_pgm(ctx.cfg.get("output"), img);
  ctx.out << "wrote " << ctx.cfg.get("output") << '\n';
}

nn::TrainConfig train_config(const Context& ctx) {
  nn::TrainConfig t;
  t.learning_rate = ctx.cfg.get_double("lr");
  t.momentum = ctx.cfg.get_double("momentum");
  t.total_steps = ctx.cfg.get_long("steps");
  t.batch_size = static_cast<int>(ctx.cfg.get_long("batch"));
  t.seed = ctx.seed();
  t.validate();
  return t;
}

void train_decoder_cmd(const Context& ctx) {
  DecoderTrainConfig cfg;
  cfg.train = train_config(ctx);
  cfg.profile = ctx.profile();
  cfg.raster_steps = static_cast<int>(ctx.cfg.get_long("raster_steps"));
  cfg.validation_size = static_cast<int>(ctx.cfg.get_long("validation_size"));
  cfg.log_every = ctx.cfg.get_long("log_every");
  cfg.workers = ctx.workers();
  const std::string output = ctx.cfg.get("output");
  const std::string log_path = ctx.path_or("log", output + ".log");

  std::ostringstream log;
  log << "# step lr loss\n";
  const auto result = train_decoder(cfg, [&](const LossLogEntry& e) {
    log << e.step << ' ' << e.learning_rate << ' ' << e.validation_loss << '\n';
    ctx.out << "step " << e.step << " lr " << e.learning_rate << " train " << e.train_loss << " held-out "
            << e.validation_loss << std::endl;
  });
  save_model(ctx, output, result.decoder);
  write_text(log_path, log.str());
}

struct SplitSet {
  nn::Tensor<float> distorted, clean;
  std::vector<int> labels;
};

SplitSet to_tensors(const std::vector<dataset::SynthSample>& samples, std::size_t begin, std::size_t end) {
  std::vector<RgbImage> rgb;
  std::vector<GrayImage> gray;
  SplitSet s;
  for (std::size_t i = begin; i < end; ++i) {
    rgb.push_back(samples[i].distorted);
    gray.push_back(samples[i].clean);
    s.labels.push_back(samples[i].label);
  }
  s.distorted = rgb_tensor(rgb);
  s.clean = images_tensor(gray);
  return s;
}

void train_extractor_cmd(const Context& ctx) {
  const auto decoder = load_model(ctx, "decoder", ctx.cfg.get("decoder"), decoder_network(ctx.profile()));
  const int samples = static_cast<int>(ctx.cfg.get_long("samples"));
  const int held_out = static_cast<int>(ctx.cfg.get_long("held_out"));
  if (samples < 1 || held_out < 0) throw DomainError("extractor: samples must be >= 1 and held_out >= 0");
  const auto data = dataset::synth_digit_set(dataset::default_glyphs(), samples + held_out, augmentation_from(ctx.cfg),
                                             Rng(ctx.seed()).substream("cli.data").next(), ctx.workers());
  const auto train = to_tensors(data, 0, samples);
  const auto test = to_tensors(data, samples, data.size());

  ExtractorTrainConfig cfg;
  cfg.train = train_config(ctx);
  cfg.profile = ctx.profile();
  cfg.log_every = ctx.cfg.get_long("log_every");
  const std::string output = ctx.cfg.get("output");
  std::ostringstream log;
  log << "# step lr loss\n";
  const auto result = train_extractor(train.distorted, train.clean, test.distorted, test.clean, decoder, cfg,
                                      [&](const ExtractorLogEntry& e) {
                                        log << e.step << ' ' << e.learning_rate << ' ' << e.held_out_loss << '\n';
                                        ctx.out << "step " << e.step << " lr " << e.learning_rate << " train "
                                                << e.train_loss << " held-out " << e.held_out_loss << std::endl;
                                      });
  ctx.out << "held-out loss at step 0: " << result.initial_held_out_loss << '\n';
  save_model(ctx, output, result.extractor);
  write_text(ctx.path_or("log", output + ".log"), log.str());

  const std::string head_path = ctx.cfg.get("head_output");
  if (!head_path.empty()) {
    ClassifierTrainConfig hc;
    hc.train.total_steps = ctx.cfg.get_long("head_steps");
    hc.train.seed = Rng(ctx.seed()).substream("cli.head").next();
    const auto head = train_classifier_head(extract_batch(result.extractor, train.distorted), train.labels, hc);
    if (test.labels.size() > 0)
      ctx.out << "head held-out accuracy: "
              << accuracy(predict(head, extract_batch(result.extractor, test.distorted)), test.labels) << '\n';
    save_model(ctx, head_path, head);
  }
}

void reconstruct_cmd(const Context& ctx) {
  const auto extractor = load_model(ctx, "extractor", ctx.cfg.get("extractor"), extractor_network(ctx.profile()));
  const auto decoder = load_model(ctx, "decoder", ctx.cfg.get("decoder"), decoder_network(ctx.profile()));
  const std::string input = ctx.cfg.get("input");
  if (input.empty()) throw UsageError("cli: reconstruct needs --input");
  if (!fs::exists(input)) throw std::runtime_error("reconstruct: input image not found: " + input);
  RgbImage image = netpbm::read_rgb(input);
  if (image.rows() != kImageSize || image.cols() != kImageSize) image = resize_bilinear(image, kImageSize, kImageSize);

  const StrokeSet strokes = extract(extractor, image);
  const GrayImage rec = render_with_decoder(decoder, strokes);
  const std::string output = ctx.cfg.get("output");
  netpbm::write_pgm(output, rec);

  std::ostringstream params;
  params.precision(9);
  for (const auto& s : strokes) {
    const auto v = s.flat();
    for (int k = 0; k < kParamsPerStroke; ++k) params << v[k] << (k + 1 < kParamsPerStroke ? ' ' : '\n');
  }
  const std::string params_path = ctx.path_or("params", output + ".txt");
  write_text(params_path, params.str());
  ctx.out << "wrote " << output << " and " << params_path << '\n';
}

void synth_data_cmd(const Context& ctx) {
  const int count = static_cast<int>(ctx.cfg.get_long("count"));
  if (count < 0) throw DomainError("dataset: count must be >= 0");
  const auto aug = augmentation_from(ctx.cfg);
  const auto lib = dataset::default_glyphs();
  const bool triplets = ctx.cfg.get_long("triplets") != 0;
  Rng root = Rng(ctx.seed()).substream("cli.synth");
  const std::uint64_t data_seed = root.next();

  std::vector<dataset::SynthSample> samples;
  if (triplets) {
    for (int i = 0; i < count; ++i) {
      Rng rng = Rng(data_seed).substream("dataset.triplet", static_cast<std::uint64_t>(i));
      const std::array<int, 3> digits{rng.uniform_int(0, 9), i % 10, rng.uniform_int(0, 9)};
      samples.push_back(dataset::synth_triplet(lib, digits, aug, rng));
    }
  } else {
    samples = dataset::synth_digit_set(lib, count, aug, data_seed, ctx.workers());
  }

  const fs::path dir = ctx.cfg.get("output");
  fs::create_directories(dir);
  std::ostringstream manifest;
  manifest << "# index label seed\n";
  dataset::IdxDataset idx;
  for (int i = 0; i < count; ++i) {
    char stem[16];
    std::snprintf(stem, sizeof stem, "%06d", i);
    netpbm::write_ppm(dir / (std::string(stem) + ".ppm"), samples[i].distorted);
    netpbm::write_pgm(dir / (std::string(stem) + "_clean.pgm"), samples[i].clean);
    manifest << i << ' ' << samples[i].label << ' ' << data_seed << '\n';
    idx.images.push_back(to_gray(samples[i].distorted));
    idx.labels.push_back(samples[i].label);
  }
  write_text(dir / "manifest.txt", manifest.str());
  const auto [images, labels] = dataset::write_idx(idx);
  write_text(dir / "images-idx3-ubyte", images);
  write_text(dir / "labels-idx1-ubyte", labels);
  ctx.out << "wrote " << count << " samples to " << dir.string() << '\n';
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// Distorted synthetic digits with the default augmentation, as [N,64,64,3] plus labels.
SplitSet attack_digits(int n, std::uint64_t seed, int workers) {
  const auto data = dataset::synth_digit_set(dataset::default_glyphs(), n, augment::AugmentationConfig{}, seed, workers);
  return to_tensors(data, 0, data.size());
}

void attack_eval_cmd(const Context& ctx) {
  const double epsilon = ctx.cfg.get_double("epsilon");
  std::vector<adversarial::AttackConfig> attacks;
  for (const auto& a : split_list(ctx.cfg.get("attacks"))) {
    adversarial::AttackConfig c;
    c.kind = adversarial::parse_attack(a);
    c.epsilon = epsilon;
    c.bim_iters = static_cast<int>(ctx.cfg.get_long("bim_iters"));
    c.validate();
    attacks.push_back(c);
  }
  std::vector<adversarial::Defense> defenses;
  bool need_scr = false;
  for (const auto& d : split_list(ctx.cfg.get("defenses"))) {
    defenses.push_back(adversarial::parse_defense(d));
    need_scr |= defenses.back().kind == adversarial::DefenseKind::scr;
  }
  const int samples = static_cast<int>(ctx.cfg.get_long("samples"));
  if (samples < 1) throw DomainError("adversarial: samples must be >= 1");

  const Rng root = Rng(ctx.seed()).substream("cli.attack");
  const std::string baseline_path = ctx.cfg.get("baseline");
  Classifier baseline;
  if (fs::exists(baseline_path)) {
    baseline = load_model(ctx, "baseline", baseline_path, baseline_network());
  } else {
    const int n = static_cast<int>(ctx.cfg.get_long("train_samples"));
    const auto train = attack_digits(n, root.substream("train").next(), ctx.workers());
    ClassifierTrainConfig cfg;
    cfg.train.total_steps = ctx.cfg.get_long("baseline_steps");
    cfg.train.seed = root.substream("baseline").next();
    ctx.out << "training baseline classifier on " << n << " samples" << std::endl;
    baseline = train_baseline_classifier(train.distorted, train.labels, cfg);
    save_model(ctx, baseline_path, baseline);
  }
  std::optional<nn::Model> extractor, decoder;
  if (need_scr) {
    extractor = load_model(ctx, "extractor", ctx.cfg.get("extractor"), extractor_network(ctx.profile()));
    decoder = load_model(ctx, "decoder", ctx.cfg.get("decoder"), decoder_network(ctx.profile()));
  }
  const auto test = attack_digits(samples, root.substream("test").next(), ctx.workers());
  const adversarial::Models models{baseline, extractor ? &*extractor : nullptr, decoder ? &*decoder : nullptr};
  const auto report = adversarial::evaluate(models, attacks, defenses, test.distorted, test.labels, ctx.seed());
  ctx.out << report.table();
  const std::string csv = ctx.cfg.get("csv");
  if (!csv.empty()) {
    write_text(csv, report.csv());
    ctx.out << "wrote " << csv << '\n';
  }
}

std::vector<Command> commands() {
  const Defaults train_keys{{"steps", "20000"}, {"batch", "32"}, {"lr", "0.03"}, {"momentum", "0.9"}};
  auto join = [](Defaults a, const Defaults& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  return {
      {"render", "Rasterize 9 (one stroke) or 36 (four strokes) parameters to a PGM",
       {{"input", "-"}, {"output", "render.pgm"}, {"steps", "512"}}, render},
      {"train-decoder", "Train the neural decoder against the reference rasterizer",
       join(train_keys, {{"profile", "mini"},
                         {"raster_steps", "512"},
                         {"validation_size", "512"},
                         {"log_every", "500"},
                         {"output", "decoder.scrw"},
                         {"log", ""}}),
       train_decoder_cmd},
      {"train-extractor", "Train the stroke extractor on synthetic digits with a frozen decoder",
       with_augmentation(join({{"steps", "3000"}, {"batch", "32"}, {"lr", "0.03"}, {"momentum", "0.9"}},
                              {{"profile", "mini"},
                               {"decoder", "decoder.scrw"},
                               {"output", "extractor.scrw"},
                               {"samples", "5000"},
                               {"held_out", "500"},
                               {"log_every", "250"},
                               {"log", ""},
                               {"head_output", ""},
                               {"head_steps", "2000"}})),
       train_extractor_cmd},
      {"reconstruct", "Extract strokes from a PPM/PGM and write the reconstruction",
       {{"profile", "mini"},
        {"extractor", "extractor.scrw"},
        {"decoder", "decoder.scrw"},
        {"input", ""},
        {"output", "reconstruction.pgm"},
        {"params", ""}},
       reconstruct_cmd},
      {"synth-data", "Write a directory of distorted synthetic digits",
       with_augmentation({{"count", "100"}, {"output", "synth"}, {"triplets", "0"}}), synth_data_cmd},
      {"attack-eval", "Evaluate FGSM/BIM attacks against the defenses",
       {{"profile", "mini"},
        {"baseline", "baseline.scrw"},
        {"extractor", "extractor.scrw"},
        {"decoder", "decoder.scrw"},
        {"epsilon", "0.3"},
        {"attacks", "fgsm,bim"},
        {"bim_iters", "10"},
        {"defenses", "none,bit_depth:1,median:3,scr"},
        {"samples", "500"},
        {"train_samples", "5000"},
        {"baseline_steps", "6000"},
        {"csv", "attack_eval.csv"}},
       attack_eval_cmd},
  };
}

std::string flag_name(std::string key) {
  for (auto& c : key)
    if (c == '_') c = '-';
  return "--" + key;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stroke-based character reconstruction toolkit", "scr"};
  app.require_subcommand(1);
  const auto cmds = commands();

  struct Bound {
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
    std::string config_file;
  };
  std::vector<std::unique_ptr<Bound>> bound;
  std::vector<CLI::App*> subs;
  for (const auto& cmd : cmds) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    auto& b = *bound.emplace_back(std::make_unique<Bound>());
    sub->add_option("--config", b.config_file, "key = value file; flags override it");
    Defaults keys = cmd.defaults;
    keys.insert(keys.begin(), {{"seed", "0"}, {"workers", "1"}});
    for (const auto& [k, v] : keys) {
      b.values[k] = v;
      b.options[k] = sub->add_option(flag_name(k), b.values[k])->default_str(v.empty() ? "\"\"" : v);
    }
    subs.push_back(sub);
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }

  for (std::size_t i = 0; i < cmds.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    const auto& b = *bound[i];
    Defaults keys = cmds[i].defaults;
    keys.insert(keys.begin(), {{"seed", "0"}, {"workers", "1"}});
    RunConfig cfg(keys);
    try {
      if (!b.config_file.empty()) cfg.apply_file(dataset::read_file(b.config_file), b.config_file);
      for (const auto& [k, opt] : b.options)
        if (opt->count() > 0) cfg.set(k, b.values.at(k));
      for (const auto& [k, v] : keys) {
        // Keys with a numeric default only take numbers.
        const std::size_t lead = !v.empty() && v[0] == '-' ? 1 : 0;
        if (v.size() <= lead || !std::isdigit(static_cast<unsigned char>(v[lead])) || v.find(' ') != std::string::npos)
          continue;
        if (v.find_first_of(".eE") == std::string::npos) cfg.get_long(k);
        else cfg.get_double(k);
      }
      const Context ctx{cfg, out, err};
      ctx.seed();
      ctx.workers();
      if (cfg.has("profile")) ctx.profile();
    } catch (const std::exception& e) {
      err << "usage error: " << e.what() << '\n';
      return 2;
    }
    out << "seed " << cfg.get("seed") << " config_digest " << cfg.digest() << std::endl;
    try {
      cmds[i].body(Context{cfg, out, err});
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return 1;
    }
    return 0;
  }
  return 2;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace scr::cli
