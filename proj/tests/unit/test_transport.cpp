#include <gtest/gtest.h>

#include <chrono>
#include <random>

#include "forge/service.hpp"
#include "forge/transport.hpp"
#include "support/scenes.hpp"

using namespace forge;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::InvalidArgument;
}

std::vector<ClientEndpoint> all_kinds(const std::variant<LocalMockTransport, HttpTransport, SubprocessTransport>& t,
                                      double timeout_s = 30.0) {
    std::vector<ClientEndpoint> out;
    for (ClientKind k : kAllClientKinds) out.push_back(ClientEndpoint{k, t, timeout_s});
    return out;
}

/// Mock backend served in-process on a free port.
struct MockServer {
    Service service;
    std::string url;
    MockServer() : service(config(), ServiceOptions{true}) {
        service.bind();
        service.start();
        url = "http://127.0.0.1:" + std::to_string(service.port());
    }
    static Config config() {
        Config c = default_config();
        c.port = 0;
        c.studio_dir = "";
        return c;
    }
};

SceneAnnotation car_scene() {
    SceneAnnotation s;
    s.image_ref = "scene.png";
    s.instances = {Instance{1, "car", BBox::make(0.6, 0.5, 0.9, 0.8), ""}};
    return s;
}

void exercise_all(const ClientSet& remote, std::mt19937_64& rng) {
    const ClientSet local = mock_clients();
    const Image img = oracle::random_image(rng, 37, 29);
    EXPECT_EQ(remote.depth->predict(img), local.depth->predict(img));

    Image rgba = oracle::random_image(rng, 20, 16, 4);
    EXPECT_EQ(remote.segment->segment(rgba, std::nullopt).raster(), local.segment->segment(rgba, std::nullopt).raster());

    const Mask m = oracle::random_blob(rng, 37, 29);
    EXPECT_EQ(remote.inpaint->remove(img, m), local.inpaint->remove(img, m));

    const SceneAnnotation scene = car_scene();
    const DepthMap depth = mock_depth(img);
    const auto a = remote.locate->locate(img, depth, "Place the dog to the left of the car.", &scene);
    const auto b = local.locate->locate(img, depth, "Place the dog to the left of the car.", &scene);
    EXPECT_EQ(a.location, b.location);
    EXPECT_EQ(a.raw_text, b.raw_text);

    const ConditioningBundle bundle = scenes::random_bundle(rng);
    EXPECT_EQ(remote.composite->compose(bundle), local.composite->compose(bundle));
}

}  // namespace

TEST(Payload, RoundTrip) {
    const Bytes bytes{0, 1, 2, 250, 255};
    const nlohmann::json j = encode_payload(bytes, "png");
    EXPECT_EQ(j["format"], "png");
    EXPECT_EQ(j["encoding"], "base64");
    EXPECT_EQ(decode_payload(j, "png"), bytes);
    EXPECT_EQ(code_of([&] { decode_payload(j, "pfm"); }), ErrorCode::MalformedResponse);
    EXPECT_EQ(code_of([] { decode_payload(nlohmann::json::array(), "png"); }), ErrorCode::MalformedResponse);
}

TEST(Payload, SplitAndJoinParts) {
    std::mt19937_64 rng(1);
    const nlohmann::json req = inpaint_request(oracle::random_image(rng, 30, 20), oracle::random_blob(rng, 30, 20));
    const MultipartBody mp = split_parts(req);
    EXPECT_EQ(mp.parts.size(), 2u);
    EXPECT_EQ(mp.request["image"]["encoding"], "part");
    const nlohmann::json back = join_parts(mp.request, [&](const std::string& name) -> const Bytes* {
        for (const auto& [n, b] : mp.parts)
            if (n == name) return &b;
        return nullptr;
    });
    EXPECT_EQ(back, req);
    EXPECT_EQ(code_of([&] { join_parts(mp.request, [](const std::string&) -> const Bytes* { return nullptr; }); }),
              ErrorCode::SchemaViolation);
}

TEST(Backend, ErrorsBecomeBodies) {
    const ClientSet mocks = mock_clients();
    const nlohmann::json reply = handle_backend_request(ClientKind::segment, segment_request(Image(5, 5, 4, 0), std::nullopt), mocks);
    ASSERT_TRUE(reply.contains("error"));
    EXPECT_EQ(reply["error"]["code"], "NoForeground");
    EXPECT_EQ(code_of([&] { segment_response(reply); }), ErrorCode::NoForeground);
    const nlohmann::json bad = handle_backend_request(ClientKind::depth, nlohmann::json::object(), mocks);
    EXPECT_TRUE(bad.contains("error"));
}

TEST(Backend, MalformedResponses) {
    EXPECT_EQ(code_of([] { depth_response(nlohmann::json::object()); }), ErrorCode::MalformedResponse);
    EXPECT_EQ(code_of([] { depth_response(nlohmann::json{{"depth", {{"format", "pfm"}, {"encoding", "base64"}, {"data", "AAAA"}}}}); }),
              ErrorCode::MalformedResponse);
    EXPECT_EQ(code_of([] { locate_response(nlohmann::json{{"location", {{"bbox", {0.5, 0.5, 0.2, 0.9}}, {"depth", 0.3}}}}); }),
              ErrorCode::MalformedResponse);
    EXPECT_EQ(code_of([] { rethrow_error_body(nlohmann::json{{"error", {{"code", "Timeout"}, {"message", "slow"}}}}); }),
              ErrorCode::Timeout);
}

TEST(Http, MatchesLocalMocks) {
    MockServer server;
    std::mt19937_64 rng(2);
    exercise_all(make_clients(all_kinds(HttpTransport{server.url})), rng);
}

TEST(Http, LargeBodiesUseMultipart) {
    MockServer server;
    std::mt19937_64 rng(3);
    const Image img = oracle::random_image(rng, 800, 600);
    const Mask m = Mask::from_rect(800, 600, PixelRect{100, 100, 300, 250});
    ASSERT_GT(inpaint_request(img, m).dump().size(), kMultipartThreshold);
    const ClientSet remote = make_clients(all_kinds(HttpTransport{server.url}));
    EXPECT_EQ(remote.inpaint->remove(img, m), mock_inpaint(img, m));
}

TEST(Http, ErrorBodyIsRethrown) {
    MockServer server;
    const ClientSet remote = make_clients(all_kinds(HttpTransport{server.url}));
    EXPECT_EQ(code_of([&] { remote.segment->segment(Image(6, 6, 4, 0), std::nullopt); }), ErrorCode::NoForeground);
}

TEST(Http, UnreachableBackend) {
    int port = 0;
    {
        MockServer server;
        port = server.service.port();
    }
    const ClientSet remote = make_clients(all_kinds(HttpTransport{"http://127.0.0.1:" + std::to_string(port)}, 2.0));
    const ErrorCode code = code_of([&] { remote.depth->predict(Image(4, 4, 3)); });
    EXPECT_TRUE(code == ErrorCode::BackendUnavailable || code == ErrorCode::Timeout) << to_string(code);
}

TEST(Subprocess, MatchesLocalMocks) {
    std::mt19937_64 rng(4);
    exercise_all(make_clients(all_kinds(SubprocessTransport{std::string("'") + FORGE_CLI_PATH + "' mock-backend"})), rng);
}

TEST(Subprocess, Timeout) {
    const auto start = std::chrono::steady_clock::now();
    const ErrorCode code = code_of([] { subprocess_call(SubprocessTransport{"sleep 5"}, ClientKind::depth, depth_request(Image(2, 2, 3)), 0.2); });
    EXPECT_EQ(code, ErrorCode::Timeout);
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 3.0);
}

TEST(Subprocess, BadReplies) {
    const nlohmann::json req = depth_request(Image(4, 4, 3));
    EXPECT_EQ(code_of([&] { subprocess_call(SubprocessTransport{"echo not-json"}, ClientKind::depth, req, 5.0); }),
              ErrorCode::MalformedResponse);
    EXPECT_EQ(code_of([&] { subprocess_call(SubprocessTransport{"true"}, ClientKind::depth, req, 5.0); }),
              ErrorCode::BackendUnavailable);

    oracle::TempDir dir;
    const nlohmann::json small{{"depth", depth_payload(DepthMap(2, 2, 0.5f))}};
    write_text(dir / "reply.json", small.dump());
    const ClientSet wrong = make_clients({ClientEndpoint{ClientKind::depth, SubprocessTransport{"cat " + oracle::quote(dir / "reply.json")}, 5.0}});
    EXPECT_EQ(code_of([&] { wrong.depth->predict(Image(4, 4, 3)); }), ErrorCode::MalformedResponse);
    EXPECT_EQ(wrong.depth->predict(Image(2, 2, 3)), DepthMap(2, 2, 0.5f));

    write_text(dir / "err.json", error_body(ErrorCode::NoForeground, "nothing there").dump());
    const ClientSet err = make_clients({ClientEndpoint{ClientKind::segment, SubprocessTransport{"cat " + oracle::quote(dir / "err.json")}, 5.0}});
    EXPECT_EQ(code_of([&] { err.segment->segment(Image(4, 4, 3), std::nullopt); }), ErrorCode::NoForeground);
}

TEST(Endpoints, DescribeAndFallback) {
    const ClientEndpoint e{ClientKind::locate, HttpTransport{"http://127.0.0.1:9"}, 3.0};
    EXPECT_EQ(e.transport_name(), "http");
    EXPECT_EQ(e.describe()["kind"], "locate");
    const ClientSet set = make_clients(std::vector<ClientEndpoint>{});
    EXPECT_EQ(set.depth->predict(Image(3, 3, 3)), mock_depth(Image(3, 3, 3)));
}
