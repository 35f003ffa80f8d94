// Copyright 2026 The TerraSeg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <sstream>
#include <thread>

#include "cli/cli.hpp"
#include "cli/service.hpp"
#include "support/test_support.hpp"
#include "terraseg/tensor_io.hpp"

namespace terraseg {
namespace {

const ClassSchema& schema() { return ClassSchema::default_schema(); }

std::string mask_bytes(const LabelMap& m) {
  return testing::to_string(encode_mask(m, schema(), MaskEncoding::kRawValues));
}

class RunningService {
 public:
  explicit RunningService(ServiceConfig cfg = {}) : service_(schema(), with_any_port(cfg)) {
    port_ = service_.bind();
    thread_ = std::thread([this] { service_.run(); });
    service_.wait_until_ready();
  }
  ~RunningService() {
    service_.stop();
    thread_.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(30, 0);
    return c;
  }

 private:
  static ServiceConfig with_any_port(ServiceConfig cfg) {
    cfg.port = 0;
    return cfg;
  }
  Service service_;
  int port_ = 0;
  std::thread thread_;
};

std::string cli_stdout(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  EXPECT_EQ(cli_dispatch(args, out, err), kExitOk) << err.str();
  return out.str();
}

TEST(Service, Healthz) {
  RunningService svc;
  auto res = svc.client().Get("/v1/healthz");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->body, "{\"status\":\"ok\"}\n");
}

TEST(Service, MetricsMatchCliBytes) {
  RunningService svc;
  testing::TempDir dir("svc");
  write_file(dir.file("g.png"), encode_mask(testing::fixture_gt(), schema(), MaskEncoding::kRawValues));
  write_file(dir.file("q.png"), encode_mask(testing::fixture_pred(), schema(), MaskEncoding::kRawValues));
  httplib::MultipartFormDataItems items{
      {"gt", mask_bytes(testing::fixture_gt()), "g.png", "image/png"},
      {"pred", mask_bytes(testing::fixture_pred()), "q.png", "image/png"}};
  auto res = svc.client().Post("/v1/metrics", items);
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;
  EXPECT_DOUBLE_EQ(nlohmann::json::parse(res->body)["pixel_accuracy"].get<double>(), 0.75);
  EXPECT_EQ(res->body, cli_stdout({"eval", "--gt", dir.file("g.png"), "--pred", dir.file("q.png")}));
}

TEST(Service, LossAndUncertaintyMatchCliBytes) {
  RunningService svc;
  testing::TempDir dir("svc");
  SeededRng rng(31);
  const Bytes logits = write_tensor(testing::random_logits(rng, 10, 5, 6));
  const LabelMap mask = testing::random_mask(rng, 5, 6, 10);
  write_file(dir.file("l.tst"), logits);
  write_file(dir.file("m.png"), encode_mask(mask, schema(), MaskEncoding::kRawValues));

  auto loss = svc.client().Post("/v1/loss", httplib::MultipartFormDataItems{
                                                {"logits", testing::to_string(logits), "l.tst", ""},
                                                {"mask", mask_bytes(mask), "m.png", "image/png"}});
  ASSERT_TRUE(loss);
  ASSERT_EQ(loss->status, 200) << loss->body;
  EXPECT_EQ(loss->body, cli_stdout({"loss", "--logits", dir.file("l.tst"), "--mask", dir.file("m.png")}));

  auto tuned = svc.client().Post(
      "/v1/loss", httplib::MultipartFormDataItems{
                      {"logits", testing::to_string(logits), "l.tst", ""},
                      {"mask", mask_bytes(mask), "m.png", "image/png"},
                      {"params", R"({"lambda_ce": 1, "lambda_dice": 0})", "", "application/json"}});
  ASSERT_TRUE(tuned);
  EXPECT_EQ(tuned->body, cli_stdout({"loss", "--logits", dir.file("l.tst"), "--mask", dir.file("m.png"),
                                     "--lambda-ce", "1", "--lambda-dice", "0"}));

  auto unc = svc.client().Post("/v1/uncertainty", httplib::MultipartFormDataItems{
                                                      {"probs", testing::to_string(logits), "l.tst", ""}});
  ASSERT_TRUE(unc);
  ASSERT_EQ(unc->status, 200) << unc->body;
  EXPECT_EQ(unc->body, cli_stdout({"uncertainty", "--probs", dir.file("l.tst")}));

  auto heat = svc.client().Post("/v1/uncertainty?heatmap=1",
                                httplib::MultipartFormDataItems{
                                    {"probs", testing::to_string(logits), "l.tst", ""}});
  ASSERT_TRUE(heat);
  EXPECT_EQ(heat->status, 200);
  EXPECT_NE(heat->get_header_value("Content-Type").find("multipart/form-data"), std::string::npos);
  EXPECT_NE(heat->body.find("\x89PNG"), std::string::npos);
}

TEST(Service, CrfCostmapAndPlan) {
  RunningService svc;
  SeededRng rng(32);
  ProbTensor probs(2, 3, 3, TensorKind::kProbabilities);
  for (std::size_t i = 0; i < 9; ++i) {
    probs.data[i] = i == 4 ? 0.4f : 0.9f;
    probs.data[9 + i] = 1.0f - probs.data[i];
  }
  auto crf = svc.client().Post(
      "/v1/crf", httplib::MultipartFormDataItems{
                     {"probs", testing::to_string(write_tensor(probs)), "p.tst", ""},
                     {"image", testing::to_string(encode_rgb(RgbImage(3, 3, 90))), "i.png", "image/png"},
                     {"params", R"({"w_smooth": 5, "theta_gamma": 2, "w_bilateral": 0})", "", ""}});
  ASSERT_TRUE(crf);
  ASSERT_EQ(crf->status, 200) << crf->body;
  const ProbTensor refined = read_tensor(testing::to_bytes(crf->body));
  EXPECT_GT(refined.at(0, 1, 1), refined.at(1, 1, 1));

  LabelMap m(6, 5, 8);
  for (int r = 0; r < 4; ++r) m.at(r, 2) = 7;
  auto cm = svc.client().Post("/v1/costmap", httplib::MultipartFormDataItems{
                                                 {"mask", mask_bytes(m), "m.png", "image/png"}});
  ASSERT_TRUE(cm);
  ASSERT_EQ(cm->status, 200) << cm->body;
  const std::string& body = cm->body;
  EXPECT_NE(body.find("terraseg-part-boundary"), std::string::npos);
  const auto png_at = body.find("\x89PNG");
  ASSERT_NE(png_at, std::string::npos);
  const auto png_end = body.rfind("\r\n--terraseg-part-boundary");
  const std::string png = body.substr(png_at, png_end - png_at);

  auto plan = svc.client().Post(
      "/v1/plan", httplib::MultipartFormDataItems{
                      {"costmap", png, "c.png", "image/png"},
                      {"request", R"({"start": [0, 0], "goal": [0, 5]})", "", "application/json"}});
  ASSERT_TRUE(plan);
  ASSERT_EQ(plan->status, 200) << plan->body;
  EXPECT_GT(nlohmann::json::parse(plan->body)["waypoints"].size(), 5u);
}

TEST(Service, BadInputsGiveStructured400) {
  RunningService svc;
  auto missing = svc.client().Post("/v1/metrics", httplib::MultipartFormDataItems{
                                                      {"gt", mask_bytes(testing::fixture_gt()), "g.png", ""}});
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 400);
  EXPECT_TRUE(nlohmann::json::parse(missing->body).contains("error"));

  auto corrupt = svc.client().Post("/v1/metrics", httplib::MultipartFormDataItems{
                                                      {"gt", "garbage", "g.png", ""},
                                                      {"pred", "garbage", "q.png", ""}});
  ASSERT_TRUE(corrupt);
  EXPECT_EQ(corrupt->status, 400);
  EXPECT_EQ(nlohmann::json::parse(corrupt->body)["error"]["code"], "CorruptPng");

  auto bad_json = svc.client().Post(
      "/v1/loss", httplib::MultipartFormDataItems{
                      {"logits", testing::to_string(write_tensor(ProbTensor(10, 1, 1, TensorKind::kLogits))), "", ""},
                      {"mask", mask_bytes(LabelMap(1, 1, 0)), "", ""},
                      {"params", "{nope", "", ""}});
  ASSERT_TRUE(bad_json);
  EXPECT_EQ(bad_json->status, 400);
}

TEST(Service, OversizedBodyGives413) {
  ServiceConfig cfg;
  cfg.max_body_bytes = 1024;
  RunningService svc(cfg);
  auto res = svc.client().Post("/v1/metrics", httplib::MultipartFormDataItems{
                                                  {"gt", std::string(4096, 'x'), "g.png", ""},
                                                  {"pred", "x", "q.png", ""}});
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 413);
}

TEST(Service, ConcurrentRequestsAgree) {
  RunningService svc;
  const std::string expected = [&] {
    auto r = svc.client().Post("/v1/metrics", httplib::MultipartFormDataItems{
                                                  {"gt", mask_bytes(testing::fixture_gt()), "", ""},
                                                  {"pred", mask_bytes(testing::fixture_pred()), "", ""}});
    return r ? r->body : std::string();
  }();
  ASSERT_FALSE(expected.empty());
  std::atomic<int> matches{0};
  std::vector<std::thread> workers;
  for (int t = 0; t < 8; ++t) {
    workers.emplace_back([&] {
      for (int i = 0; i < 5; ++i) {
        auto r = svc.client().Post("/v1/metrics", httplib::MultipartFormDataItems{
                                                      {"gt", mask_bytes(testing::fixture_gt()), "", ""},
                                                      {"pred", mask_bytes(testing::fixture_pred()), "", ""}});
        if (r && r->status == 200 && r->body == expected) ++matches;
      }
    });
  }
  for (auto& w : workers) w.join();
  EXPECT_EQ(matches.load(), 40);
}

TEST(Service, BodyLimitResolution) {
  EXPECT_EQ(resolve_max_body_bytes(std::size_t{123}), 123u);
  ::unsetenv("TERRASEG_MAX_BODY_BYTES");
  EXPECT_EQ(resolve_max_body_bytes(std::nullopt), kDefaultMaxBodyBytes);
  ::setenv("TERRASEG_MAX_BODY_BYTES", "2048", 1);
  EXPECT_EQ(resolve_max_body_bytes(std::nullopt), 2048u);
  ::unsetenv("TERRASEG_MAX_BODY_BYTES");
}

}  // namespace
}  // namespace terraseg
