// Symmetric triangle rules (Xiao-Gimbutas) on the reference triangle (0,0), (1,0), (0,1).
// Entries are (xi, eta, weight); weights sum to 1/2.

pub(super) const DEGREE_1: [[f64; 3]; 1] = [
    [0.3333333333333333, 0.3333333333333333, 0.5],
];

pub(super) const DEGREE_2: [[f64; 3]; 3] = [
    [0.16666666666666666, 0.16666666666666666, 0.16666666666666666],
    [0.16666666666666666, 0.6666666666666667, 0.16666666666666666],
    [0.6666666666666667, 0.16666666666666666, 0.16666666666666666],
];

pub(super) const DEGREE_3: [[f64; 3]; 6] = [
    [0.4459484909159649, 0.4459484909159649, 0.11169079483900574],
    [0.09157621350977085, 0.09157621350977085, 0.05497587182766094],
    [0.4459484909159649, 0.10810301816807022, 0.11169079483900574],
    [0.09157621350977085, 0.8168475729804583, 0.05497587182766094],
    [0.10810301816807022, 0.4459484909159649, 0.11169079483900574],
    [0.8168475729804583, 0.09157621350977085, 0.05497587182766094],
];

pub(super) const DEGREE_4: [[f64; 3]; 6] = [
    [0.4459484909159649, 0.4459484909159649, 0.11169079483900574],
    [0.09157621350977085, 0.09157621350977085, 0.05497587182766094],
    [0.4459484909159649, 0.10810301816807022, 0.11169079483900574],
    [0.09157621350977085, 0.8168475729804583, 0.05497587182766094],
    [0.10810301816807022, 0.4459484909159649, 0.11169079483900574],
    [0.8168475729804583, 0.09157621350977085, 0.05497587182766094],
];

pub(super) const DEGREE_5: [[f64; 3]; 7] = [
    [0.3333333333333333, 0.3333333333333333, 0.1125],
    [0.1012865073234564, 0.1012865073234564, 0.06296959027241357],
    [0.47014206410511505, 0.47014206410511505, 0.0661970763942531],
    [0.1012865073234564, 0.7974269853530872, 0.06296959027241357],
    [0.47014206410511505, 0.05971587178976989, 0.0661970763942531],
    [0.7974269853530872, 0.1012865073234564, 0.06296959027241357],
    [0.05971587178976989, 0.47014206410511505, 0.0661970763942531],
];

pub(super) const DEGREE_6: [[f64; 3]; 12] = [
    [0.21942998254978302, 0.21942998254978302, 0.08566656207649052],
    [0.48013796411221504, 0.48013796411221504, 0.04036554479651549],
    [0.21942998254978302, 0.561140034900434, 0.08566656207649052],
    [0.48013796411221504, 0.039724071775569914, 0.04036554479651549],
    [0.561140034900434, 0.21942998254978302, 0.08566656207649052],
    [0.039724071775569914, 0.48013796411221504, 0.04036554479651549],
    [0.019371724361240805, 0.14161901592396814, 0.02031727989683033],
    [0.8390092597147911, 0.019371724361240805, 0.02031727989683033],
    [0.14161901592396814, 0.8390092597147911, 0.02031727989683033],
    [0.14161901592396814, 0.019371724361240805, 0.02031727989683033],
    [0.8390092597147911, 0.14161901592396814, 0.02031727989683033],
    [0.019371724361240805, 0.8390092597147911, 0.02031727989683033],
];

pub(super) const DEGREE_7: [[f64; 3]; 15] = [
    [0.47319565368925104, 0.47319565368925104, 0.02659041664838023],
    [0.057797640054506494, 0.057797640054506494, 0.020459085197028434],
    [0.24166360639724743, 0.24166360639724743, 0.06386262428056692],
    [0.47319565368925104, 0.05360869262149792, 0.02659041664838023],
    [0.057797640054506494, 0.884404719890987, 0.020459085197028434],
    [0.24166360639724743, 0.5166727872055051, 0.06386262428056692],
    [0.05360869262149792, 0.47319565368925104, 0.02659041664838023],
    [0.884404719890987, 0.057797640054506494, 0.020459085197028434],
    [0.5166727872055051, 0.24166360639724743, 0.06386262428056692],
    [0.046971206130085534, 0.2593390118657857, 0.027877270270345547],
    [0.6936897820041288, 0.046971206130085534, 0.027877270270345547],
    [0.2593390118657857, 0.6936897820041288, 0.027877270270345547],
    [0.2593390118657857, 0.046971206130085534, 0.027877270270345547],
    [0.6936897820041288, 0.2593390118657857, 0.027877270270345547],
    [0.046971206130085534, 0.6936897820041288, 0.027877270270345547],
];

pub(super) const DEGREE_8: [[f64; 3]; 16] = [
    [0.3333333333333333, 0.3333333333333333, 0.0721578038388936],
    [0.17056930775176027, 0.17056930775176027, 0.05160868526735912],
    [0.4592925882927231, 0.4592925882927231, 0.04754581713364232],
    [0.05054722831703107, 0.05054722831703107, 0.01622924881159904],
    [0.17056930775176027, 0.6588613844964795, 0.05160868526735912],
    [0.4592925882927231, 0.08141482341455375, 0.04754581713364232],
    [0.05054722831703107, 0.8989055433659379, 0.01622924881159904],
    [0.6588613844964795, 0.17056930775176027, 0.05160868526735912],
    [0.08141482341455375, 0.4592925882927231, 0.04754581713364232],
    [0.8989055433659379, 0.05054722831703107, 0.01622924881159904],
    [0.008394777409957675, 0.26311282963463806, 0.013615157087217498],
    [0.7284923929554044, 0.008394777409957675, 0.013615157087217498],
    [0.26311282963463806, 0.7284923929554044, 0.013615157087217498],
    [0.26311282963463806, 0.008394777409957675, 0.013615157087217498],
    [0.7284923929554044, 0.26311282963463806, 0.013615157087217498],
    [0.008394777409957675, 0.7284923929554044, 0.013615157087217498],
];

pub(super) const DEGREE_9: [[f64; 3]; 19] = [
    [0.3333333333333333, 0.3333333333333333, 0.04856789814139942],
    [0.4896825191987376, 0.4896825191987376, 0.015667350113569536],
    [0.1882035356190328, 0.1882035356190328, 0.03982386946360513],
    [0.43708959149293664, 0.43708959149293664, 0.03891377050238714],
    [0.04472951339445275, 0.04472951339445275, 0.012788837829349017],
    [0.4896825191987376, 0.02063496160252476, 0.015667350113569536],
    [0.1882035356190328, 0.6235929287619344, 0.03982386946360513],
    [0.43708959149293664, 0.12582081701412673, 0.03891377050238714],
    [0.04472951339445275, 0.9105409732110945, 0.012788837829349017],
    [0.02063496160252476, 0.4896825191987376, 0.015667350113569536],
    [0.6235929287619344, 0.1882035356190328, 0.03982386946360513],
    [0.12582081701412673, 0.43708959149293664, 0.03891377050238714],
    [0.9105409732110945, 0.04472951339445275, 0.012788837829349017],
    [0.0368384120547363, 0.2219629891607657, 0.021641769688644688],
    [0.741198598784498, 0.0368384120547363, 0.021641769688644688],
    [0.2219629891607657, 0.741198598784498, 0.021641769688644688],
    [0.2219629891607657, 0.0368384120547363, 0.021641769688644688],
    [0.741198598784498, 0.2219629891607657, 0.021641769688644688],
    [0.0368384120547363, 0.741198598784498, 0.021641769688644688],
];

pub(super) const DEGREE_10: [[f64; 3]; 25] = [
    [0.3333333333333333, 0.3333333333333333, 0.041807437186986963],
    [0.4951734598011705, 0.4951734598011705, 0.004896295249209152],
    [0.019139415242841296, 0.019139415242841296, 0.003192679615059327],
    [0.18448501268524653, 0.18448501268524653, 0.039316884873188636],
    [0.42823482094371884, 0.42823482094371884, 0.03762366398427199],
    [0.4951734598011705, 0.009653080397658997, 0.004896295249209152],
    [0.019139415242841296, 0.9617211695143174, 0.003192679615059327],
    [0.18448501268524653, 0.6310299746295069, 0.039316884873188636],
    [0.42823482094371884, 0.14353035811256232, 0.03762366398427199],
    [0.009653080397658997, 0.4951734598011705, 0.004896295249209152],
    [0.9617211695143174, 0.019139415242841296, 0.003192679615059327],
    [0.6310299746295069, 0.18448501268524653, 0.039316884873188636],
    [0.14353035811256232, 0.42823482094371884, 0.03762366398427199],
    [0.03472362048232748, 0.13373475510086913, 0.014481140731628171],
    [0.03758272734119169, 0.3266931362813369, 0.019369524543009452],
    [0.8315416244168035, 0.03472362048232748, 0.014481140731628171],
    [0.6357241363774714, 0.03758272734119169, 0.019369524543009452],
    [0.13373475510086913, 0.8315416244168035, 0.014481140731628171],
    [0.3266931362813369, 0.6357241363774714, 0.019369524543009452],
    [0.13373475510086913, 0.03472362048232748, 0.014481140731628171],
    [0.3266931362813369, 0.03758272734119169, 0.019369524543009452],
    [0.8315416244168035, 0.13373475510086913, 0.014481140731628171],
    [0.6357241363774714, 0.3266931362813369, 0.019369524543009452],
    [0.03472362048232748, 0.8315416244168035, 0.014481140731628171],
    [0.03758272734119169, 0.6357241363774714, 0.019369524543009452],
];
