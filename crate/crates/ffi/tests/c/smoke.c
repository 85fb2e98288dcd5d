#include <math.h>
#include <stdio.h>
#include <string.h>

#include "msfload.h"

#define CHECK(cond)                                                       \
    do {                                                                  \
        if (!(cond)) {                                                    \
            const char *msg = msf_last_error_message();                   \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #cond, \
                    msg ? msg : "no error");                              \
            return 1;                                                     \
        }                                                                 \
    } while (0)

int main(void) {
    double x[40];
    double y[20];
    for (int i = 0; i < 20; i++) {
        x[2 * i] = i;
        x[2 * i + 1] = (i * 7) % 5;
        y[i] = 2.0 * i + 10.0;
    }

    MsfMetrics m;
    CHECK(msf_metrics(y, y, 20, &m) == MSF_STATUS_OK);
    CHECK(m.mae == 0.0 && m.rmse == 0.0 && m.n == 20);
    CHECK(msf_metrics(y, NULL, 20, &m) == MSF_STATUS_NULL_POINTER);
    CHECK(strstr(msf_last_error_message(), "yhat") != NULL);

    const char *names[2] = {"trend", "noise"};
    MsfModel *model = NULL;
    CHECK(msf_model_train("{\"kind\":\"gbrt\",\"n_trees\":50,\"max_depth\":2}", x, 20, 2, y, names, &model)
          == MSF_STATUS_OK);
    CHECK(msf_model_n_features(model) == 2);
    CHECK(strcmp(msf_model_kind(model), "gbrt") == 0);

    double pred[20];
    CHECK(msf_model_predict(model, x, 20, 2, pred) == MSF_STATUS_OK);
    MsfMetrics fit;
    CHECK(msf_metrics(y, pred, 20, &fit) == MSF_STATUS_OK);
    CHECK(fit.mape < 5.0);
    CHECK(msf_model_predict(model, x, 10, 4, pred) == MSF_STATUS_SCHEMA_MISMATCH);

    char *json = NULL;
    CHECK(msf_model_to_json(model, &json) == MSF_STATUS_OK);
    CHECK(strstr(json, "\"trend\"") != NULL);
    msf_string_free(json);
    msf_model_free(model);

    double zenith, azimuth;
    CHECK(msf_solar_position(43.66, -70.26, 1624291200.0, &zenith, &azimuth) == MSF_STATUS_OK);
    CHECK(zenith >= 0.0 && zenith <= 180.0);
    CHECK(msf_clear_sky_ghi(0.0) > 1000.0);

    printf("ok %s\n", msf_version());
    return 0;
}
